package com.acme.xml;

public class Helper {
  public static int count(String value) {
    return value.length();
  }
}
