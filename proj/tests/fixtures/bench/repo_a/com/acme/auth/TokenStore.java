package com.acme.auth;

public class TokenStore {
  public String load(String key) {
    return Session.fetch(key);
  }
}
