#pragma once

#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "evgr/error.hpp"

namespace evgr::detail {

// Minimal pull tokenizer for the XML subset XES files use: elements with
// attributes, comments, processing instructions, CDATA and character
// references. Character data between tags is skipped. Malformed input
// raises Error{ParseError} with the current line number.
class XmlReader {
 public:
  struct Attr {
    std::string name;
    std::string value;
  };

  enum class EventType { StartElement, EndElement, Eof };

  struct Event {
    EventType type = EventType::Eof;
    std::string name;
    std::vector<Attr> attrs;
    bool self_closing = false;

    const std::string* attr(std::string_view name) const {
      for (const Attr& a : attrs)
        if (a.name == name) return &a.value;
      return nullptr;
    }
  };

  explicit XmlReader(std::istream& in) : in_(in) {}

  int line() const { return line_; }

  const Event& next() {
    event_.attrs.clear();
    event_.name.clear();
    event_.self_closing = false;

    while (true) {
      int c = get();
      if (c < 0) {
        event_.type = EventType::Eof;
        return event_;
      }
      if (c != '<') continue;  // character data is not used by XES parsing

      c = get();
      if (c == '?') {
        skip_until("?>");
        continue;
      }
      if (c == '!') {
        if (try_consume("--")) {
          skip_until("-->");
        } else if (try_consume("[CDATA[")) {
          skip_until("]]>");
        } else {
          skip_until(">");  // DOCTYPE and friends
        }
        continue;
      }
      if (c == '/') {
        read_name(get_required("element name"));
        skip_space();
        expect('>');
        event_.type = EventType::EndElement;
        return event_;
      }
      parse_start_tag(c);
      return event_;
    }
  }

 private:
  void parse_start_tag(int first) {
    read_name(first);
    while (true) {
      skip_space();
      int c = get_required("element");
      if (c == '>') break;
      if (c == '/') {
        expect('>');
        event_.self_closing = true;
        break;
      }
      Attr attr;
      while (c > 0 && c != '=' && !std::isspace(c)) {
        attr.name.push_back(char(c));
        c = get_required("attribute");
      }
      while (std::isspace(c)) c = get_required("attribute");
      if (c != '=') fail("expected '=' after attribute name");
      skip_space();
      int quote = get_required("attribute value");
      if (quote != '"' && quote != '\'') fail("attribute value must be quoted");
      while (true) {
        c = get_required("attribute value");
        if (c == quote) break;
        if (c == '&')
          attr.value += read_entity();
        else
          attr.value.push_back(char(c));
      }
      event_.attrs.push_back(std::move(attr));
    }
    event_.type = EventType::StartElement;
  }

  std::string read_entity() {
    std::string name;
    while (true) {
      int c = get_required("entity");
      if (c == ';') break;
      name.push_back(char(c));
      if (name.size() > 10) fail("unterminated entity");
    }
    if (name == "amp") return "&";
    if (name == "lt") return "<";
    if (name == "gt") return ">";
    if (name == "quot") return "\"";
    if (name == "apos") return "'";
    if (name.size() > 1 && name[0] == '#') {
      long code = name[1] == 'x' || name[1] == 'X'
                      ? std::strtol(name.c_str() + 2, nullptr, 16)
                      : std::strtol(name.c_str() + 1, nullptr, 10);
      std::string out;
      // encode as UTF-8
      if (code < 0x80) {
        out.push_back(char(code));
      } else if (code < 0x800) {
        out.push_back(char(0xc0 | (code >> 6)));
        out.push_back(char(0x80 | (code & 0x3f)));
      } else if (code < 0x10000) {
        out.push_back(char(0xe0 | (code >> 12)));
        out.push_back(char(0x80 | ((code >> 6) & 0x3f)));
        out.push_back(char(0x80 | (code & 0x3f)));
      } else {
        out.push_back(char(0xf0 | (code >> 18)));
        out.push_back(char(0x80 | ((code >> 12) & 0x3f)));
        out.push_back(char(0x80 | ((code >> 6) & 0x3f)));
        out.push_back(char(0x80 | (code & 0x3f)));
      }
      return out;
    }
    fail("unknown entity &" + name + ";");
  }

  void read_name(int first) {
    if (first <= 0 || std::isspace(first) || first == '>')
      fail("expected element name");
    event_.name.push_back(char(first));
    while (true) {
      int c = peek();
      if (c < 0 || std::isspace(c) || c == '>' || c == '/') break;
      event_.name.push_back(char(get()));
    }
  }

  void skip_space() {
    while (std::isspace(peek())) get();
  }

  void expect(char want) {
    int c = get_required("input");
    if (c != want) fail(std::string("expected '") + want + "'");
  }

  bool try_consume(std::string_view text) {
    for (size_t i = 0; i < text.size(); ++i) {
      if (peek() != text[i]) {
        // only used at "<!" where lookahead of one char suffices to decide
        return false;
      }
      get();
    }
    return true;
  }

  void skip_until(std::string_view terminator) {
    size_t matched = 0;
    while (matched < terminator.size()) {
      int c = get();
      if (c < 0) fail("unterminated markup");
      matched = c == terminator[matched] ? matched + 1 : (c == terminator[0] ? 1 : 0);
    }
  }

  int get() {
    int c = peek();
    if (c >= 0) {
      ++pos_;
      if (c == '\n') ++line_;
    }
    return c;
  }

  int get_required(std::string_view what) {
    int c = get();
    if (c < 0) fail("unexpected end of input in " + std::string(what));
    return c;
  }

  int peek() {
    if (pos_ >= len_) {
      in_.read(buf_, sizeof(buf_));
      len_ = size_t(in_.gcount());
      pos_ = 0;
      if (len_ == 0) return -1;
    }
    return static_cast<unsigned char>(buf_[pos_]);
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw_error(Errc::ParseError, "line " + std::to_string(line_) + ": " + message);
  }

  std::istream& in_;
  char buf_[64 << 10];
  size_t pos_ = 0, len_ = 0;
  int line_ = 1;
  Event event_;
};

}  // namespace evgr::detail
