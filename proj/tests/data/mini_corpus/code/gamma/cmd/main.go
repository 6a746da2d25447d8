package main

import (
	"fmt"
	"os"
	"strings"
)

func wordCount(text string) map[string]int {
	counts := make(map[string]int)
	for _, w := range strings.Fields(text) {
		counts[strings.ToLower(w)]++
	}
	return counts
}

func main() {
	if len(os.Args) < 2 {
		fmt.Println("usage: wc TEXT")
		os.Exit(2)
	}
	for word, n := range wordCount(os.Args[1]) {
		fmt.Printf("%s %d\n", word, n)
	}
}
