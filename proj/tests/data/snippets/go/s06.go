package main

func (p *Point) Move(dx int) {
	p.X += dx
}
