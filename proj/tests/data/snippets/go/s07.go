package main

func loop() {
	for i := 0; i < 3; i++ {
		println(i)
	}
}
