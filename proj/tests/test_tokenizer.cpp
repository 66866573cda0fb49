#include "catch_amalgamated.hpp"

#include <string>

#include "litmeth/tokenizer.hpp"
#include "support/tmpdir.hpp"

using namespace litmeth;

namespace {

Vocab fixture_vocab() { return load_vocab_file(testsupport::fixture("vocab.txt")); }

// Greedy longest-prefix reference: at every step the chosen piece must be
// the longest in-vocab prefix of what remains.
std::vector<std::string> reference_wordpiece(const std::string& word, const Vocab& vocab) {
    std::vector<std::string> pieces;
    std::size_t start = 0;
    while (start < word.size()) {
        std::string found;
        for (std::size_t end = word.size(); end > start; --end) {
            std::string candidate =
                (start > 0 ? "##" : "") + word.substr(start, end - start);
            if (vocab.id_of(candidate) >= 0 && candidate.size() > found.size()) {
                found = candidate;
                break;  // longest first
            }
        }
        if (found.empty()) return {"[UNK]"};
        pieces.push_back(found);
        start += found.size() - (pieces.size() > 1 ? 2 : 0);
    }
    return pieces;
}

}  // namespace

TEST_CASE("load_vocab: specials-only file") {
    Vocab vocab = load_vocab("[PAD]\n[UNK]\n[CLS]\n[SEP]\n");
    CHECK(vocab.size() == 4);
    CHECK(vocab.pad_id == 0);
    CHECK(vocab.unk_id == 1);
    CHECK(vocab.cls_id == 2);
    CHECK(vocab.sep_id == 3);
}

TEST_CASE("load_vocab: fixture ids follow line order") {
    Vocab vocab = fixture_vocab();
    CHECK(vocab.size() == 10);
    CHECK(vocab.id_of("##rna") == 6);
    CHECK(vocab.id_of("hpv") == 4);
}

TEST_CASE("load_vocab: duplicate names the second line") {
    try {
        load_vocab_file(testsupport::fixture("vocab_dup.txt"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position() == 7);
        CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    }
}

TEST_CASE("load_vocab: missing specials and misplaced [PAD]") {
    CHECK_THROWS_AS(load_vocab("[PAD]\n[UNK]\n[CLS]\n"), ConfigError);
    CHECK_THROWS_AS(load_vocab("[UNK]\n[PAD]\n[CLS]\n[SEP]\n"), ConfigError);
}

TEST_CASE("normalize: lowercase, punctuation split, empty input") {
    CHECK(normalize("HPV mRNA") == "hpv mrna");
    CHECK(normalize("p16.") == "p16 .");
    CHECK(normalize("") == "");
    CHECK(normalize("  spaced\tout \n text ") == "spaced out text");
    CHECK(normalize("(CT)") == "( ct )");
}

TEST_CASE("normalize: control characters and accents") {
    std::string with_control = "ab";
    with_control.insert(1, 1, '\x01');
    CHECK(normalize(with_control) == "ab");
    CHECK(normalize("caf\xC3\xA9") == "cafe");
    CHECK(normalize("Se\xC3\xB1or") == "senor");
}

TEST_CASE("encode: empty text is [CLS][SEP] plus pads") {
    Vocab vocab = fixture_vocab();
    Encoding enc = encode("", vocab, 8);
    REQUIRE(enc.ids.size() == 8);
    REQUIRE(enc.attention_mask.size() == 8);
    CHECK(enc.ids[0] == vocab.cls_id);
    CHECK(enc.ids[1] == vocab.sep_id);
    for (std::size_t i = 2; i < 8; ++i) CHECK(enc.ids[i] == vocab.pad_id);
    std::size_t mask_sum = 0;
    for (auto m : enc.attention_mask) mask_sum += m;
    CHECK(mask_sum == 2);
    CHECK_FALSE(enc.truncated);
}

TEST_CASE("encode: unknown word becomes a single [UNK]") {
    Vocab vocab = fixture_vocab();
    Encoding enc = encode("zzzz", vocab, 8);
    CHECK(enc.ids[0] == vocab.cls_id);
    CHECK(enc.ids[1] == vocab.unk_id);
    CHECK(enc.ids[2] == vocab.sep_id);
}

TEST_CASE("encode: wordpiece continuation against the fixture vocab") {
    Vocab vocab = fixture_vocab();
    Encoding enc = encode("hpv mrna", vocab, 8);
    std::vector<std::int32_t> expected = {vocab.cls_id,      vocab.id_of("hpv"),
                                          vocab.id_of("m"),  vocab.id_of("##rna"),
                                          vocab.sep_id,      vocab.pad_id,
                                          vocab.pad_id,      vocab.pad_id};
    CHECK(enc.ids == expected);
}

TEST_CASE("encode: truncation keeps the head and the final [SEP]") {
    Vocab vocab = fixture_vocab();
    Encoding enc = encode("hpv hpv hpv hpv hpv", vocab, 4);
    REQUIRE(enc.ids.size() == 4);
    CHECK(enc.truncated);
    CHECK(enc.ids[0] == vocab.cls_id);
    CHECK(enc.ids[1] == vocab.id_of("hpv"));
    CHECK(enc.ids[2] == vocab.id_of("hpv"));
    CHECK(enc.ids[3] == vocab.sep_id);
}

TEST_CASE("encode: max_len below 2 is invalid; default is 512") {
    Vocab vocab = fixture_vocab();
    CHECK_THROWS_AS(encode("x", vocab, 1), InvalidInputError);
    CHECK(encode("hpv", vocab).ids.size() == kDefaultMaxLen);
    CHECK(kDefaultMaxLen == 512);
}

TEST_CASE("encoding invariants: fixed length and prefix mask") {
    Vocab vocab = fixture_vocab();
    const char* texts[] = {"", "hpv", "p16. ish hpv mrna", "zzz qqq hpv", "hpv mrna ish p16"};
    for (const char* txt : texts) {
        for (std::size_t max_len : {2ul, 5ul, 16ul, 64ul}) {
            Encoding enc = encode(txt, vocab, max_len);
            REQUIRE(enc.ids.size() == max_len);
            REQUIRE(enc.attention_mask.size() == max_len);
            bool seen_pad = false;
            for (std::size_t i = 0; i < max_len; ++i) {
                if (enc.attention_mask[i] == 0) seen_pad = true;
                else CHECK_FALSE(seen_pad);  // 1s form a prefix
                CHECK((enc.attention_mask[i] == 1) == (enc.ids[i] != vocab.pad_id));
            }
            // first non-pad is [CLS], last non-pad is [SEP]
            CHECK(enc.ids[0] == vocab.cls_id);
            std::size_t last = max_len;
            while (last > 0 && enc.attention_mask[last - 1] == 0) --last;
            CHECK(enc.ids[last - 1] == vocab.sep_id);
        }
    }
}

TEST_CASE("greedy longest-prefix agrees with brute force on short words") {
    Vocab vocab = load_vocab(
        "[PAD]\n[UNK]\n[CLS]\n[SEP]\n"
        "a\nab\nabc\nr\nrn\n##a\n##b\n##bc\n##c\n##na\n##rna\nm\nhpv\n");
    Rng rng(31337);
    const char alphabet[] = {'a', 'b', 'c', 'r', 'n', 'm'};
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t len = 1 + rng.next_below(12);
        std::string word;
        for (std::size_t i = 0; i < len; ++i)
            word.push_back(alphabet[rng.next_below(sizeof(alphabet))]);

        Encoding enc = encode(word, vocab, 32);
        std::vector<std::string> got;
        for (std::size_t i = 1; i < enc.ids.size(); ++i) {
            if (enc.ids[i] == vocab.sep_id) break;
            got.push_back(enc.ids[i] == vocab.unk_id
                              ? "[UNK]"
                              : vocab.tokens[static_cast<std::size_t>(enc.ids[i])]);
        }
        CHECK(got == reference_wordpiece(word, vocab));
    }
}

TEST_CASE("decode: fuses continuations and drops specials") {
    Vocab vocab = fixture_vocab();
    CHECK(decode({vocab.cls_id, vocab.id_of("m"), vocab.id_of("##rna"), vocab.sep_id}, vocab) ==
          "mrna");
    CHECK(decode({vocab.cls_id, vocab.sep_id, vocab.pad_id}, vocab) == "");
    CHECK_THROWS_AS(decode({9999}, vocab), InvalidInputError);
}

TEST_CASE("decode(encode(x)) is identity for in-vocab words") {
    Vocab vocab = fixture_vocab();
    for (const char* txt : {"hpv", "hpv mrna", "p16 ish hpv"}) {
        Encoding enc = encode(txt, vocab, 16);
        CHECK(decode(enc.ids, vocab) == normalize(txt));
    }
}
