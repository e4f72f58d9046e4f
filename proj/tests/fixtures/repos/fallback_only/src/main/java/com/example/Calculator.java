package com.example;

public class Calculator {
  public int scale(int value) {
    return value * 2;
  }

  public int offset(int value) {
    return value + 7;
  }
}
