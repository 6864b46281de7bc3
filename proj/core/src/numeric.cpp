namespace z22 {}
