package com.example;

public class XmlRenderer {
  public String render(Object message) {
    XStream stream = new XStream();
    return stream.toXML(message);
  }

  public String describe() {
    return "renderer";
  }
}
