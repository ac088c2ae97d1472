#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ddsrecon::xml {

/// One parsed element. Text content is the concatenation of all character
/// data directly inside the element, entity-decoded, with pure-whitespace
/// runs between child elements dropped.
struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::string text;
  std::size_t offset = 0;  // byte offset of the opening '<'

  const Element* find(std::string_view child_name) const;
  const std::string* attribute(std::string_view attr_name) const;
};

/// Parses a standalone UTF-8 XML document: one root element, optional XML
/// declaration and comments. No DTDs, CDATA, processing instructions or
/// namespaces — permission documents need none of those. Throws ParseError.
Element parse_document(std::string_view input);

std::string escape_text(std::string_view text);

}  // namespace ddsrecon::xml
