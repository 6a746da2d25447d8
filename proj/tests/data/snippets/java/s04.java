interface Shape {
    double area();
}
