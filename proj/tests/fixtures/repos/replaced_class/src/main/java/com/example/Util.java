package com.example;

public class Util {
  public static int clamp(int value, int max) {
    return Math.min(value, max);
  }
}
