#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "litmeth/error.hpp"
#include "litmeth/text.hpp"

namespace litmeth {

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::size_t kDefaultMaxLen = 512;

// Uncased WordPiece vocabulary: one token per line, id = line index.
// [PAD] sits at id 0 by convention; all four specials must be present.
struct Vocab {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, std::int32_t> token_to_id;
    std::int32_t pad_id = 0;
    std::int32_t unk_id = 0;
    std::int32_t cls_id = 0;
    std::int32_t sep_id = 0;

    std::size_t size() const { return tokens.size(); }

    std::int32_t id_of(std::string_view token) const {
        auto it = token_to_id.find(std::string(token));
        return it == token_to_id.end() ? -1 : it->second;
    }

    bool is_special(std::int32_t id) const {
        return id == pad_id || id == unk_id || id == cls_id || id == sep_id;
    }
};

inline Vocab load_vocab(std::string_view raw) {
    Vocab vocab;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        if (pos == raw.size() && line_no > 0) break;
        std::size_t nl = raw.find('\n', pos);
        std::string_view line = raw.substr(pos, (nl == std::string_view::npos ? raw.size() : nl) - pos);
        bool last = (nl == std::string_view::npos);
        pos = last ? raw.size() + 1 : nl + 1;
        ++line_no;
        if (last && line.empty()) break;  // trailing newline
        std::string token(line);
        if (!token.empty() && token.back() == '\r') token.pop_back();
        auto [it, inserted] =
            vocab.token_to_id.emplace(token, static_cast<std::int32_t>(vocab.tokens.size()));
        if (!inserted)
            throw ParseError("duplicate vocab token '" + token + "' (line " +
                                 std::to_string(line_no) + ")",
                             line_no);
        vocab.tokens.push_back(std::move(token));
    }

    auto require = [&](std::string_view name) {
        std::int32_t id = vocab.id_of(name);
        if (id < 0) throw ConfigError("vocab is missing the " + std::string(name) + " token");
        return id;
    };
    vocab.pad_id = require(kPadToken);
    vocab.unk_id = require(kUnkToken);
    vocab.cls_id = require(kClsToken);
    vocab.sep_id = require(kSepToken);
    if (vocab.pad_id != 0)
        throw ConfigError("vocab must place [PAD] at id 0 (found id " +
                          std::to_string(vocab.pad_id) + ")");
    return vocab;
}

inline Vocab load_vocab_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open vocab file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return load_vocab(buf.str());
}

// Uncased pre-tokenization: lowercase, accents stripped, control
// characters removed, punctuation split into standalone tokens, runs of
// whitespace collapsed to single spaces.
inline std::string normalize(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    bool started = false;
    auto emit = [&](char32_t cp) {
        if (pending_space && started) out.push_back(' ');
        pending_space = false;
        utf8::encode(cp, out);
        started = true;
    };
    for (std::size_t i = 0; i < raw.size();) {
        char32_t cp = utf8::decode(raw, i);
        if (text::is_control(cp) || cp == 0xFFFD || cp == 0) continue;
        if (text::is_space(cp)) {
            pending_space = true;
            continue;
        }
        cp = text::strip_accent(text::to_lower(cp));
        if (text::is_punct(cp)) {
            // standalone token: force a break on both sides
            if (started) out.push_back(' ');
            utf8::encode(cp, out);
            pending_space = true;
            started = true;
            continue;
        }
        emit(cp);
    }
    return out;
}

struct Encoding {
    std::vector<std::int32_t> ids;            // length exactly max_len
    std::vector<std::uint8_t> attention_mask;  // 1 where ids is non-[PAD]
    bool truncated = false;
};

namespace detail {

// Greedy longest-prefix WordPiece split of one word. Returns token ids;
// a word with no in-vocab prefix becomes a single [UNK].
inline void wordpiece_split(const std::string& word, const Vocab& vocab,
                            std::vector<std::int32_t>& out) {
    std::vector<char32_t> cps = utf8::decode_all(word);
    std::vector<std::int32_t> pieces;
    std::size_t start = 0;
    while (start < cps.size()) {
        std::int32_t found = -1;
        std::size_t found_end = start;
        for (std::size_t end = cps.size(); end > start; --end) {
            std::string candidate = start > 0 ? "##" : "";
            for (std::size_t k = start; k < end; ++k) utf8::encode(cps[k], candidate);
            std::int32_t id = vocab.id_of(candidate);
            if (id >= 0) {
                found = id;
                found_end = end;
                break;
            }
        }
        if (found < 0) {
            out.push_back(vocab.unk_id);
            return;
        }
        pieces.push_back(found);
        start = found_end;
    }
    out.insert(out.end(), pieces.begin(), pieces.end());
}

}  // namespace detail

// [CLS] pieces [SEP], truncated to max_len keeping the head of the text
// and the final [SEP], then padded with [PAD] / mask 0.
inline Encoding encode(std::string_view txt, const Vocab& vocab,
                       std::size_t max_len = kDefaultMaxLen) {
    if (max_len < 2) throw InvalidInputError("encode: max_len must be at least 2");
    std::vector<std::int32_t> pieces;
    for (const auto& word : text::split_words(normalize(txt)))
        detail::wordpiece_split(word, vocab, pieces);

    Encoding enc;
    if (pieces.size() > max_len - 2) {
        pieces.resize(max_len - 2);
        enc.truncated = true;
    }
    enc.ids.reserve(max_len);
    enc.ids.push_back(vocab.cls_id);
    enc.ids.insert(enc.ids.end(), pieces.begin(), pieces.end());
    enc.ids.push_back(vocab.sep_id);
    enc.attention_mask.assign(enc.ids.size(), 1);
    enc.ids.resize(max_len, vocab.pad_id);
    enc.attention_mask.resize(max_len, 0);
    return enc;
}

// Drops specials, fuses "##" continuations, joins words with spaces.
inline std::string decode(const std::vector<std::int32_t>& ids, const Vocab& vocab) {
    std::string out;
    for (std::int32_t id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab.size())
            throw InvalidInputError("decode: unknown token id " + std::to_string(id));
        if (vocab.is_special(id)) continue;
        const std::string& token = vocab.tokens[static_cast<std::size_t>(id)];
        if (token.starts_with("##")) {
            out += token.substr(2);
        } else {
            if (!out.empty()) out.push_back(' ');
            out += token;
        }
    }
    return out;
}

}  // namespace litmeth
