#include "ddsrecon/xml.hpp"

#include <cctype>

#include "ddsrecon/errors.hpp"

namespace ddsrecon::xml {

const Element* Element::find(std::string_view child_name) const {
  for (const Element& c : children)
    if (c.name == child_name) return &c;
  return nullptr;
}

const std::string* Element::attribute(std::string_view attr_name) const {
  for (const auto& [k, v] : attributes)
    if (k == attr_name) return &v;
  return nullptr;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view input) : in_(input) {}

  Element parse() {
    skip_prolog();
    Element root = parse_element();
    skip_misc();
    if (pos_ != in_.size()) fail("trailing content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("XML: " + msg, pos_);
  }

  bool eof() const { return pos_ >= in_.size(); }
  char peek() const { return in_[pos_]; }
  bool starts_with(std::string_view s) const {
    return in_.substr(pos_, s.size()) == s;
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  void skip_comment() {
    pos_ += 4;  // "<!--"
    std::size_t end = in_.find("-->", pos_);
    if (end == std::string_view::npos) fail("unterminated comment");
    pos_ = end + 3;
  }

  void skip_prolog() {
    skip_ws();
    if (starts_with("<?xml")) {
      std::size_t end = in_.find("?>", pos_);
      if (end == std::string_view::npos) fail("unterminated XML declaration");
      pos_ = end + 2;
    }
    skip_misc();
    if (eof() || peek() != '<') fail("expected root element");
  }

  void skip_misc() {
    while (true) {
      skip_ws();
      if (starts_with("<!--"))
        skip_comment();
      else
        return;
    }
  }

  std::string parse_name() {
    std::size_t start = pos_;
    auto name_char = [](char c, bool first) {
      if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') return true;
      if (first) return false;
      return (c >= '0' && c <= '9') || c == '-' || c == '.';
    };
    while (!eof() && name_char(peek(), pos_ == start)) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(in_.substr(start, pos_ - start));
  }

  std::string decode_entities(std::string_view raw, std::size_t base_offset) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out += raw[i];
        continue;
      }
      std::size_t semi = raw.find(';', i);
      if (semi == std::string_view::npos)
        throw ParseError("XML: unterminated entity", base_offset + i);
      std::string_view ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "lt")
        out += '<';
      else if (ent == "gt")
        out += '>';
      else if (ent == "amp")
        out += '&';
      else if (ent == "quot")
        out += '"';
      else if (ent == "apos")
        out += '\'';
      else if (!ent.empty() && ent[0] == '#') {
        int base = 10;
        std::size_t k = 1;
        if (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X')) {
          base = 16;
          k = 2;
        }
        long code = 0;
        bool any = false;
        for (; k < ent.size(); ++k) {
          char c = ent[k];
          int v;
          if (c >= '0' && c <= '9')
            v = c - '0';
          else if (base == 16 && c >= 'a' && c <= 'f')
            v = c - 'a' + 10;
          else if (base == 16 && c >= 'A' && c <= 'F')
            v = c - 'A' + 10;
          else
            throw ParseError("XML: bad character reference", base_offset + i);
          code = code * base + v;
          any = true;
          if (code > 0x10ffff)
            throw ParseError("XML: character reference out of range",
                             base_offset + i);
        }
        if (!any)
          throw ParseError("XML: bad character reference", base_offset + i);
        // Encode as UTF-8.
        if (code < 0x80) {
          out += static_cast<char>(code);
        } else if (code < 0x800) {
          out += static_cast<char>(0xc0 | (code >> 6));
          out += static_cast<char>(0x80 | (code & 0x3f));
        } else if (code < 0x10000) {
          out += static_cast<char>(0xe0 | (code >> 12));
          out += static_cast<char>(0x80 | ((code >> 6) & 0x3f));
          out += static_cast<char>(0x80 | (code & 0x3f));
        } else {
          out += static_cast<char>(0xf0 | (code >> 18));
          out += static_cast<char>(0x80 | ((code >> 12) & 0x3f));
          out += static_cast<char>(0x80 | ((code >> 6) & 0x3f));
          out += static_cast<char>(0x80 | (code & 0x3f));
        }
      } else {
        throw ParseError("XML: unknown entity \"&" + std::string(ent) + ";\"",
                         base_offset + i);
      }
      i = semi;
    }
    return out;
  }

  Element parse_element() {
    if (eof() || peek() != '<') fail("expected '<'");
    Element el;
    el.offset = pos_;
    ++pos_;
    el.name = parse_name();
    // attributes
    while (true) {
      std::size_t before = pos_;
      skip_ws();
      if (eof()) fail("unterminated start tag");
      if (peek() == '>' || starts_with("/>")) break;
      if (pos_ == before) fail("expected whitespace before attribute");
      std::string attr = parse_name();
      skip_ws();
      if (eof() || peek() != '=') fail("expected '=' in attribute");
      ++pos_;
      skip_ws();
      if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
      char quote = peek();
      ++pos_;
      std::size_t vstart = pos_;
      while (!eof() && peek() != quote && peek() != '<') ++pos_;
      if (eof() || peek() != quote) fail("unterminated attribute value");
      el.attributes.emplace_back(
          attr, decode_entities(in_.substr(vstart, pos_ - vstart), vstart));
      ++pos_;
    }
    if (starts_with("/>")) {
      pos_ += 2;
      return el;
    }
    ++pos_;  // '>'
    // content
    while (true) {
      std::size_t text_start = pos_;
      while (!eof() && peek() != '<') ++pos_;
      if (eof()) fail("unterminated element <" + el.name + ">");
      std::string_view raw = in_.substr(text_start, pos_ - text_start);
      std::string decoded = decode_entities(raw, text_start);
      bool all_ws = true;
      for (char c : decoded)
        if (!std::isspace(static_cast<unsigned char>(c))) all_ws = false;
      if (!all_ws || el.children.empty()) {
        // keep leading text; drop indentation runs between children
        if (!all_ws) el.text += decoded;
      }
      if (starts_with("<!--")) {
        skip_comment();
        continue;
      }
      if (starts_with("</")) {
        pos_ += 2;
        std::string closing = parse_name();
        if (closing != el.name)
          fail("mismatched closing tag </" + closing + "> for <" + el.name + ">");
        skip_ws();
        if (eof() || peek() != '>') fail("expected '>' in closing tag");
        ++pos_;
        return el;
      }
      if (starts_with("<!")) fail("unsupported markup declaration");
      el.children.push_back(parse_element());
    }
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

Element parse_document(std::string_view input) { return Parser(input).parse(); }

std::string escape_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace ddsrecon::xml
