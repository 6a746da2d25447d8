impl Point {
    fn norm(&self) -> i32 {
        self.x * self.x + self.y * self.y
    }
}
