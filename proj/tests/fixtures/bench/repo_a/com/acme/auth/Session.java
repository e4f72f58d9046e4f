package com.acme.auth;

public class Session {
  public static String fetch(String key) {
    return key;
  }

  public static String fetchChecked(String key) {
    return key.trim();
  }
}
