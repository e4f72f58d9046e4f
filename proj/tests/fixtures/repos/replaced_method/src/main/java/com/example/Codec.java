package com.example;

public class Codec {
  public static String decode(String raw) {
    return raw.trim();
  }

  public static String decodeSafe(String raw) {
    return raw.strip();
  }
}
