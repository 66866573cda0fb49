#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace litmeth {

// UTF-8 helpers shared by the ontology surface index, the annotator and
// the tokenizer. Invalid byte sequences are skipped rather than rejected:
// all call sites treat input as untrusted article text.

namespace utf8 {

// Decodes one code point starting at s[i]; advances i past it.
// Returns U+FFFD for malformed sequences (consuming one byte).
inline char32_t decode(std::string_view s, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    auto cont = [&](std::size_t k) {
        return k < s.size() && (byte(k) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
        char32_t cp = (char32_t(b0 & 0x1F) << 6) | (byte(i + 1) & 0x3F);
        i += 2;
        return cp >= 0x80 ? cp : 0xFFFD;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
        char32_t cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(byte(i + 1) & 0x3F) << 6) |
                      (byte(i + 2) & 0x3F);
        i += 3;
        return cp >= 0x800 ? cp : 0xFFFD;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        char32_t cp = (char32_t(b0 & 0x07) << 18) | (char32_t(byte(i + 1) & 0x3F) << 12) |
                      (char32_t(byte(i + 2) & 0x3F) << 6) | (byte(i + 3) & 0x3F);
        i += 4;
        return (cp >= 0x10000 && cp <= 0x10FFFF) ? cp : 0xFFFD;
    }
    ++i;
    return 0xFFFD;
}

inline void encode(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::vector<char32_t> decode_all(std::string_view s) {
    std::vector<char32_t> cps;
    cps.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) cps.push_back(decode(s, i));
    return cps;
}

inline std::string encode_all(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) encode(cp, out);
    return out;
}

}  // namespace utf8

namespace text {

inline bool is_space(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
           cp == U'\v' || cp == 0x00A0;
}

inline bool is_control(char32_t cp) {
    if (cp == U'\t' || cp == U'\n' || cp == U'\r') return false;  // treated as whitespace
    return cp < 0x20 || cp == 0x7F;
}

// ASCII punctuation plus a few common typographic marks.
inline bool is_punct(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= U'!' && cp <= U'/') || (cp >= U':' && cp <= U'@') ||
               (cp >= U'[' && cp <= U'`') || (cp >= U'{' && cp <= U'~');
    }
    switch (cp) {
        case 0x2010: case 0x2011: case 0x2012: case 0x2013: case 0x2014:  // dashes
        case 0x2018: case 0x2019: case 0x201C: case 0x201D:               // quotes
        case 0x2026:                                                      // ellipsis
            return true;
        default:
            return false;
    }
}

// Lowercases ASCII, Latin-1 and Latin Extended-A; other code points pass
// through unchanged.
inline char32_t to_lower(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;  // Latin-1 capitals
    if (cp >= 0x100 && cp <= 0x177) {
        // Latin Extended-A alternates upper/lower.
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    switch (cp) {
        case 0x178: return 0xFF;  // Ÿ
        case 0x179: return 0x17A;
        case 0x17B: return 0x17C;
        case 0x17D: return 0x17E;
        default: return cp;
    }
}

// Strips combining accents from lowercase Latin-1 / Latin Extended-A
// letters (e -> e, é -> e). Returns 0 when the character should be
// dropped entirely.
inline char32_t strip_accent(char32_t cp) {
    if (cp >= 0xE0 && cp <= 0xE5) return U'a';
    if (cp == 0xE7) return U'c';
    if (cp >= 0xE8 && cp <= 0xEB) return U'e';
    if (cp >= 0xEC && cp <= 0xEF) return U'i';
    if (cp == 0xF1) return U'n';
    if (cp >= 0xF2 && cp <= 0xF6) return U'o';
    if (cp >= 0xF9 && cp <= 0xFC) return U'u';
    if (cp == 0xFD || cp == 0xFF) return U'y';
    if (cp >= 0x100 && cp <= 0x105) return U'a';
    if (cp >= 0x106 && cp <= 0x10D) return U'c';
    if (cp >= 0x10E && cp <= 0x111) return U'd';
    if (cp >= 0x112 && cp <= 0x11B) return U'e';
    if (cp >= 0x11C && cp <= 0x123) return U'g';
    if (cp >= 0x124 && cp <= 0x127) return U'h';
    if (cp >= 0x128 && cp <= 0x131) return U'i';
    if (cp >= 0x134 && cp <= 0x135) return U'j';
    if (cp >= 0x136 && cp <= 0x138) return U'k';
    if (cp >= 0x139 && cp <= 0x142) return U'l';
    if (cp >= 0x143 && cp <= 0x14B) return U'n';
    if (cp >= 0x14C && cp <= 0x153) return U'o';
    if (cp >= 0x154 && cp <= 0x159) return U'r';
    if (cp >= 0x15A && cp <= 0x161) return U's';
    if (cp >= 0x162 && cp <= 0x167) return U't';
    if (cp >= 0x168 && cp <= 0x173) return U'u';
    if (cp >= 0x174 && cp <= 0x175) return U'w';
    if (cp >= 0x176 && cp <= 0x177) return U'y';
    if (cp >= 0x179 && cp <= 0x17E) return U'z';
    return cp;
}

// Normalization used for ontology surface forms and annotation matching:
// lowercase plus whitespace collapse. No stemming, no punctuation handling.
inline std::string normalize_surface(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    bool started = false;
    for (std::size_t i = 0; i < raw.size();) {
        char32_t cp = utf8::decode(raw, i);
        if (is_space(cp)) {
            pending_space = started;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        utf8::encode(to_lower(cp), out);
        started = true;
    }
    return out;
}

inline std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : s) {
        if (c == ' ') {
            if (!cur.empty()) words.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

inline std::size_t count_words(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (c == ' ') {
            in_word = false;
        } else if (!in_word) {
            ++n;
            in_word = true;
        }
    }
    return n;
}

}  // namespace text
}  // namespace litmeth
