enum Shape {
    Circle(f64),
    Square(f64),
}
