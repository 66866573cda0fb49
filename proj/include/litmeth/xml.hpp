#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "litmeth/error.hpp"

namespace litmeth::xml {

// Small non-validating XML reader, enough for PubMed efetch and BioC
// documents: elements, attributes, character data, comments, CDATA,
// processing instructions, DOCTYPE and the standard entities. Parse
// errors carry the byte offset of the offending input.

struct Node {
    std::string name;  // empty for text nodes
    std::string text;  // set for text nodes only
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Node> children;

    bool is_text() const { return name.empty(); }

    const std::string* attribute(std::string_view key) const {
        for (const auto& [k, v] : attributes)
            if (k == key) return &v;
        return nullptr;
    }
};

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view input) : in_(input) {}

    Node parse_document() {
        skip_misc();
        if (eof()) fail("expected a root element");
        Node root = parse_element();
        skip_misc();
        if (!eof()) fail("trailing content after root element");
        return root;
    }

private:
    std::string_view in_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("XML parse error at byte " + std::to_string(pos_) + ": " + what, pos_);
    }

    bool eof() const { return pos_ >= in_.size(); }
    char peek() const { return in_[pos_]; }
    bool starts_with(std::string_view s) const { return in_.substr(pos_, s.size()) == s; }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\n' || peek() == '\r')) ++pos_;
    }

    void expect(char c) {
        if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_until(std::string_view end, const char* what) {
        std::size_t p = in_.find(end, pos_);
        if (p == std::string_view::npos) fail(std::string("unterminated ") + what);
        pos_ = p + end.size();
    }

    // Whitespace, comments, PIs and DOCTYPE between markup.
    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--")) {
                pos_ += 4;
                skip_until("-->", "comment");
            } else if (starts_with("<?")) {
                pos_ += 2;
                skip_until("?>", "processing instruction");
            } else if (starts_with("<!DOCTYPE")) {
                // no internal-subset support; skip to the closing '>'
                skip_until(">", "DOCTYPE");
            } else {
                return;
            }
        }
    }

    static bool is_name_char(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '_' || c == '-' || c == '.' || c == ':';
    }

    std::string parse_name() {
        std::size_t start = pos_;
        while (!eof() && is_name_char(peek())) ++pos_;
        if (pos_ == start) fail("expected a name");
        return std::string(in_.substr(start, pos_ - start));
    }

    void append_entity(std::string& out) {
        ++pos_;  // '&'
        std::size_t end = in_.find(';', pos_);
        if (end == std::string_view::npos || end - pos_ > 10) fail("unterminated entity");
        std::string_view ent = in_.substr(pos_, end - pos_);
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else if (!ent.empty() && ent[0] == '#') {
            bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
            unsigned long cp = 0;
            try {
                cp = std::stoul(std::string(ent.substr(hex ? 2 : 1)), nullptr, hex ? 16 : 10);
            } catch (const std::exception&) {
                fail("bad character reference");
            }
            if (cp == 0 || cp > 0x10FFFF) fail("character reference out of range");
            // encode as UTF-8
            char32_t c = static_cast<char32_t>(cp);
            if (c < 0x80) out += static_cast<char>(c);
            else if (c < 0x800) {
                out += static_cast<char>(0xC0 | (c >> 6));
                out += static_cast<char>(0x80 | (c & 0x3F));
            } else if (c < 0x10000) {
                out += static_cast<char>(0xE0 | (c >> 12));
                out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (c & 0x3F));
            } else {
                out += static_cast<char>(0xF0 | (c >> 18));
                out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
                out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (c & 0x3F));
            }
        } else {
            fail("unknown entity &" + std::string(ent) + ";");
        }
        pos_ = end + 1;
    }

    std::string parse_attr_value() {
        if (eof() || (peek() != '"' && peek() != '\'')) fail("expected a quoted attribute value");
        char quote = peek();
        ++pos_;
        std::string value;
        while (!eof() && peek() != quote) {
            if (peek() == '&') append_entity(value);
            else value += in_[pos_++];
        }
        expect(quote);
        return value;
    }

    Node parse_element() {
        expect('<');
        Node node;
        node.name = parse_name();
        for (;;) {
            skip_ws();
            if (eof()) fail("unterminated start tag <" + node.name + ">");
            if (peek() == '>') {
                ++pos_;
                break;
            }
            if (starts_with("/>")) {
                pos_ += 2;
                return node;
            }
            std::string key = parse_name();
            skip_ws();
            expect('=');
            skip_ws();
            node.attributes.emplace_back(std::move(key), parse_attr_value());
        }
        parse_content(node);
        return node;
    }

    void parse_content(Node& node) {
        std::string pending_text;
        auto flush_text = [&]() {
            if (!pending_text.empty()) {
                Node t;
                t.text = std::move(pending_text);
                node.children.push_back(std::move(t));
                pending_text.clear();
            }
        };
        for (;;) {
            if (eof()) fail("unterminated element <" + node.name + ">");
            if (peek() == '<') {
                if (starts_with("</")) {
                    flush_text();
                    pos_ += 2;
                    std::string closing = parse_name();
                    if (closing != node.name)
                        fail("mismatched closing tag </" + closing + "> for <" + node.name + ">");
                    skip_ws();
                    expect('>');
                    return;
                }
                if (starts_with("<!--")) {
                    pos_ += 4;
                    skip_until("-->", "comment");
                    continue;
                }
                if (starts_with("<![CDATA[")) {
                    pos_ += 9;
                    std::size_t end = in_.find("]]>", pos_);
                    if (end == std::string_view::npos) fail("unterminated CDATA section");
                    pending_text += std::string(in_.substr(pos_, end - pos_));
                    pos_ = end + 3;
                    continue;
                }
                if (starts_with("<?")) {
                    pos_ += 2;
                    skip_until("?>", "processing instruction");
                    continue;
                }
                flush_text();
                node.children.push_back(parse_element());
            } else if (peek() == '&') {
                append_entity(pending_text);
            } else {
                pending_text += in_[pos_++];
            }
        }
    }
};

}  // namespace detail

inline Node parse(std::string_view input) { return detail::Parser(input).parse_document(); }

// All text descendants concatenated in document order.
inline void collect_text(const Node& node, std::string& out) {
    if (node.is_text()) {
        out += node.text;
        return;
    }
    for (const auto& child : node.children) collect_text(child, out);
}

inline std::string text_content(const Node& node) {
    std::string out;
    collect_text(node, out);
    return out;
}

// First direct child element with the given name, or nullptr.
inline const Node* child(const Node& node, std::string_view name) {
    for (const auto& c : node.children)
        if (!c.is_text() && c.name == name) return &c;
    return nullptr;
}

// All descendant elements with the given name, in document order.
inline void find_all(const Node& node, std::string_view name, std::vector<const Node*>& out) {
    for (const auto& c : node.children) {
        if (c.is_text()) continue;
        if (c.name == name) out.push_back(&c);
        find_all(c, name, out);
    }
}

inline std::vector<const Node*> find_all(const Node& node, std::string_view name) {
    std::vector<const Node*> out;
    find_all(node, name, out);
    return out;
}

}  // namespace litmeth::xml
