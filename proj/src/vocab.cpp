#include "seqteach/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "seqteach/error.hpp"
#include "seqteach/random.hpp"
#include "text_util.hpp"

namespace seqteach {

namespace {

bool is_vowel_letter(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool all_lower_alpha(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

FeatureVector parse_features(std::string_view digits, std::size_t line) {
    if (digits.size() != kFeatureDim) {
        throw DataError("inventory line " + std::to_string(line) + ": expected " + std::to_string(kFeatureDim) +
                        " feature digits, got " + std::to_string(digits.size()));
    }
    FeatureVector f{};
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
        if (digits[i] != '0' && digits[i] != '1') {
            throw DataError("inventory line " + std::to_string(line) + ": non-binary feature digit '" +
                            std::string(1, digits[i]) + "'");
        }
        f[i] = static_cast<std::uint8_t>(digits[i] - '0');
    }
    return f;
}

FeatureVector features_from_list(std::initializer_list<int> on) {
    FeatureVector f{};
    for (int i : on) f[static_cast<std::size_t>(i)] = 1;
    return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// PhonemeInventory

PhonemeInventory::PhonemeInventory() {
    entries_.push_back(Phoneme{std::string(kPadPhoneme), FeatureVector{}, false});
    by_code_.emplace(std::string(kPadPhoneme), 0);
}

void PhonemeInventory::add(Phoneme phoneme) {
    if (phoneme.code.empty() || phoneme.code.find_first_of(" \t\r\n") != std::string::npos) {
        throw DataError("invalid phoneme code '" + phoneme.code + "'");
    }
    if (phoneme.code == kPadPhoneme) {
        if (std::any_of(phoneme.features.begin(), phoneme.features.end(), [](auto b) { return b != 0; })) {
            throw DataError("padding phoneme '_' must have all-zero features");
        }
        return;  // already present
    }
    if (by_code_.contains(phoneme.code)) throw DataError("duplicate phoneme code '" + phoneme.code + "'");
    for (const auto& e : entries_) {
        if (e.features == phoneme.features) {
            throw DataError("phoneme '" + phoneme.code + "' has the same features as '" + e.code + "'");
        }
    }
    by_code_.emplace(phoneme.code, entries_.size());
    entries_.push_back(std::move(phoneme));
}

PhonemeInventory PhonemeInventory::parse(std::string_view text) {
    PhonemeInventory inv;
    std::size_t line_no = 0;
    for (std::string_view line : detail::split_lines(text)) {
        ++line_no;
        if (detail::is_blank_or_comment(line)) continue;
        const auto fields = detail::split_fields(detail::trim(line));
        if (fields.size() != 3) {
            throw DataError("inventory line " + std::to_string(line_no) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
        }
        Phoneme p;
        p.code = std::string(detail::trim(fields[0]));
        p.features = parse_features(detail::trim(fields[1]), line_no);
        const auto flag = detail::trim(fields[2]);
        if (flag != "0" && flag != "1") {
            throw DataError("inventory line " + std::to_string(line_no) + ": vocalic flag must be 0 or 1");
        }
        p.vocalic = flag == "1";
        inv.add(std::move(p));
    }
    return inv;
}

const PhonemeInventory& PhonemeInventory::builtin_english() {
    // Feature layout:
    //  0 consonantal  1 syllabic  2 sonorant  3 voiced
    //  4 labial  5 dental  6 alveolar  7 postalveolar/palatal  8 velar  9 glottal
    // 10 stop 11 fricative 12 affricate 13 nasal 14 liquid 15 glide
    // 16 high 17 mid 18 low 19 front 20 central 21 back 22 round 23 tense 24 diphthong
    static const PhonemeInventory inventory = [] {
        struct Row {
            const char* code;
            std::initializer_list<int> on;
            bool vocalic;
        };
        const Row rows[] = {
            {"p", {0, 4, 10}, false},          {"b", {0, 3, 4, 10}, false},
            {"t", {0, 6, 10}, false},          {"d", {0, 3, 6, 10}, false},
            {"k", {0, 8, 10}, false},          {"g", {0, 3, 8, 10}, false},
            {"f", {0, 4, 5, 11}, false},       {"v", {0, 3, 4, 5, 11}, false},
            {"T", {0, 5, 11}, false},          {"D", {0, 3, 5, 11}, false},
            {"s", {0, 6, 11}, false},          {"z", {0, 3, 6, 11}, false},
            {"S", {0, 7, 11}, false},          {"Z", {0, 3, 7, 11}, false},
            {"h", {0, 9, 11}, false},          {"C", {0, 7, 12}, false},
            {"J", {0, 3, 7, 12}, false},       {"m", {0, 2, 3, 4, 13}, false},
            {"n", {0, 2, 3, 6, 13}, false},    {"G", {0, 2, 3, 8, 13}, false},
            {"l", {0, 2, 3, 6, 14}, false},    {"r", {0, 2, 3, 7, 14}, false},
            {"w", {2, 3, 4, 8, 15}, false},    {"y", {2, 3, 7, 15}, false},
            {"i", {1, 2, 3, 16, 19, 23}, true}, {"I", {1, 2, 3, 16, 19}, true},
            {"e", {1, 2, 3, 17, 19, 23}, true}, {"E", {1, 2, 3, 17, 19}, true},
            {"@", {1, 2, 3, 18, 19}, true},     {"a", {1, 2, 3, 18, 21}, true},
            {"c", {1, 2, 3, 17, 21, 22}, true}, {"o", {1, 2, 3, 17, 21, 22, 23}, true},
            {"U", {1, 2, 3, 16, 21, 22}, true}, {"u", {1, 2, 3, 16, 21, 22, 23}, true},
            {"^", {1, 2, 3, 17, 20}, true},     {"x", {1, 2, 3, 20}, true},
            {"Y", {1, 2, 3, 18, 20, 24}, true}, {"W", {1, 2, 3, 18, 20, 22, 24}, true},
            {"O", {1, 2, 3, 17, 21, 22, 24}, true}, {"R", {1, 2, 3, 14, 17, 20}, true},
        };
        PhonemeInventory inv;
        for (const auto& r : rows) inv.add(Phoneme{r.code, features_from_list(r.on), r.vocalic});
        return inv;
    }();
    return inventory;
}

std::optional<std::size_t> PhonemeInventory::find(std::string_view code) const {
    auto it = by_code_.find(code);
    if (it == by_code_.end()) return std::nullopt;
    return it->second;
}

std::size_t PhonemeInventory::index_of(std::string_view code) const {
    auto idx = find(code);
    if (!idx) throw DataError("unknown phoneme code '" + std::string(code) + "'");
    return *idx;
}

std::string PhonemeInventory::to_tsv() const {
    std::string out;
    for (const auto& p : entries_) {
        out += p.code;
        out += '\t';
        for (auto bit : p.features) out += static_cast<char>('0' + bit);
        out += '\t';
        out += p.vocalic ? '1' : '0';
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Alignment and encoding

Segmentation segment_spelling(std::string_view spelling) {
    std::size_t first = spelling.size();
    for (std::size_t i = 0; i < spelling.size(); ++i) {
        if (is_vowel_letter(spelling[i])) {
            first = i;
            break;
        }
        if (spelling[i] == 'y' && i > 0) {
            // 'y' is a vowel only when no earlier vowel letter exists; a
            // word-initial 'y' is the glide.
            first = i;
            break;
        }
    }
    if (first == spelling.size()) {
        throw DataError("no orthographic vowel in '" + std::string(spelling) + "'");
    }
    std::size_t end = first + 1;
    if (spelling[first] != 'y') {
        while (end < spelling.size() && is_vowel_letter(spelling[end]) && end - first < kMaxVowelLetters) ++end;
    }
    return Segmentation{std::string(spelling.substr(0, first)), std::string(spelling.substr(first, end - first)),
                        std::string(spelling.substr(end))};
}

Alignment align_word(std::string_view spelling, std::span<const std::string> phonemes,
                     const PhonemeInventory& inventory, const std::optional<Segmentation>& segmentation) {
    const std::string word(spelling);
    if (word.size() < 2) throw DataError("'" + word + "': spelling must have at least 2 letters");
    if (!all_lower_alpha(word)) throw DataError("'" + word + "': spelling must be letters a-z");

    Segmentation seg = segmentation ? *segmentation : segment_spelling(word);
    if (seg.onset + seg.vowel + seg.coda != word) {
        throw DataError("'" + word + "': segmentation '" + seg.onset + "|" + seg.vowel + "|" + seg.coda +
                        "' does not spell the word");
    }
    if (seg.vowel.empty()) throw DataError("'" + word + "': empty vowel segment");
    if (seg.onset.size() > kMaxOnsetLetters) throw DataError("'" + word + "': onset exceeds 3 letters");
    if (seg.vowel.size() > kMaxVowelLetters) throw DataError("'" + word + "': vowel grapheme exceeds 2 letters");
    if (seg.coda.size() > kMaxCodaLetters) throw DataError("'" + word + "': coda exceeds 5 letters");

    Alignment a;
    a.orth.assign(kOrthSlots, kPadLetter);
    // slots are 1-based in the layout description; indices here are 0-based
    a.orth.replace(3 - seg.onset.size(), seg.onset.size(), seg.onset);
    a.orth.replace(3, seg.vowel.size(), seg.vowel);
    a.orth.replace(5, seg.coda.size(), seg.coda);

    std::size_t vowel_pos = phonemes.size();
    for (std::size_t i = 0; i < phonemes.size(); ++i) {
        const std::size_t idx = inventory.index_of(phonemes[i]);
        if (idx == 0) throw DataError("'" + word + "': padding phoneme inside pronunciation");
        if (inventory.at(idx).vocalic) {
            if (vowel_pos != phonemes.size()) throw DataError("'" + word + "': more than one vowel phoneme");
            vowel_pos = i;
        }
    }
    if (vowel_pos == phonemes.size()) throw DataError("'" + word + "': no vowel phoneme");
    const std::size_t coda_count = phonemes.size() - vowel_pos - 1;
    if (vowel_pos > kMaxOnsetPhonemes) throw DataError("'" + word + "': more than 3 onset phonemes");
    if (coda_count > kMaxCodaPhonemes) throw DataError("'" + word + "': more than 4 coda phonemes");

    a.phon.fill(std::string(kPadPhoneme));
    for (std::size_t i = 0; i < vowel_pos; ++i) a.phon[3 - vowel_pos + i] = phonemes[i];
    a.phon[3] = phonemes[vowel_pos];
    for (std::size_t i = 0; i < coda_count; ++i) a.phon[4 + i] = phonemes[vowel_pos + 1 + i];
    return a;
}

std::vector<std::uint8_t> encode_orthography(std::string_view aligned_orth) {
    if (aligned_orth.size() != kOrthSlots) {
        throw DataError("aligned orthography must have 10 slots, got " + std::to_string(aligned_orth.size()));
    }
    std::vector<std::uint8_t> bits(kInputDim, 0);
    for (std::size_t slot = 0; slot < kOrthSlots; ++slot) {
        const char c = aligned_orth[slot];
        if (c == kPadLetter) continue;
        if (c < 'a' || c > 'z') throw DataError(std::string("non-alphabetic slot character '") + c + "'");
        bits[slot * kAlphabetSize + static_cast<std::size_t>(c - 'a')] = 1;
    }
    return bits;
}

std::string decode_orthography(std::span<const std::uint8_t> bits) {
    if (bits.size() != kInputDim) throw DataError("orthographic vector must have 260 entries");
    std::string out(kOrthSlots, kPadLetter);
    for (std::size_t slot = 0; slot < kOrthSlots; ++slot) {
        int seen = 0;
        for (std::size_t r = 0; r < kAlphabetSize; ++r) {
            if (bits[slot * kAlphabetSize + r]) {
                out[slot] = static_cast<char>('a' + r);
                ++seen;
            }
        }
        if (seen > 1) throw DataError("slot " + std::to_string(slot + 1) + " has more than one letter bit");
    }
    return out;
}

std::vector<std::uint8_t> encode_phonology(std::span<const std::string> aligned_phon,
                                           const PhonemeInventory& inventory) {
    if (aligned_phon.size() != kPhonSlots) throw DataError("aligned phonology must have 8 slots");
    std::vector<std::uint8_t> y;
    y.reserve(kOutputDim);
    for (const auto& code : aligned_phon) {
        const auto& f = inventory.at(inventory.index_of(code)).features;
        y.insert(y.end(), f.begin(), f.end());
    }
    return y;
}

std::size_t WordItem::phon_length() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(alignment.phon.begin(), alignment.phon.end(), [](const auto& c) { return c != kPadPhoneme; }));
}

WordItem make_word_item(std::string_view spelling, std::span<const std::string> phonemes,
                        const PhonemeInventory& inventory, const std::optional<Segmentation>& segmentation) {
    WordItem item;
    item.word = std::string(spelling);
    item.segmentation = segmentation ? *segmentation : segment_spelling(spelling);
    item.alignment = align_word(spelling, phonemes, inventory, item.segmentation);
    item.o = encode_orthography(item.alignment.orth);
    item.y = encode_phonology(item.alignment.phon, inventory);
    for (std::size_t i = 0; i < item.o.size(); ++i) {
        if (item.o[i]) item.active_inputs.push_back(static_cast<std::uint16_t>(i));
    }
    for (std::size_t s = 0; s < kPhonSlots; ++s) {
        item.phoneme_index[s] = static_cast<std::uint16_t>(inventory.index_of(item.alignment.phon[s]));
    }
    return item;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(PhonemeInventory inventory, std::vector<WordItem> items)
    : inventory_(std::move(inventory)), items_(std::move(items)) {
    for (std::size_t i = 0; i < items_.size(); ++i) {
        const auto& item = items_[i];
        if (!by_word_.emplace(item.word, i).second) throw DataError("duplicate word '" + item.word + "'");
        for (const auto& code : item.alignment.phon) inventory_.index_of(code);
        for (const auto& [name, value] : item.weights) {
            if (!(value >= 0.0) || !std::isfinite(value)) {
                throw DataError("word '" + item.word + "': weight '" + name + "' must be a nonnegative number");
            }
            if (std::find(weight_columns_.begin(), weight_columns_.end(), name) == weight_columns_.end()) {
                weight_columns_.push_back(name);
            }
        }
    }
}

std::optional<std::size_t> Vocabulary::find(std::string_view word) const {
    auto it = by_word_.find(word);
    if (it == by_word_.end()) return std::nullopt;
    return it->second;
}

std::string Vocabulary::to_tsv() const {
    std::string out = "word\tonset\tvowel\tcoda\tphonemes";
    for (const auto& c : weight_columns_) out += "\t" + c;
    out += '\n';
    for (const auto& item : items_) {
        out += item.word + '\t' + item.segmentation.onset + '\t' + item.segmentation.vowel + '\t' +
               item.segmentation.coda + '\t';
        bool first = true;
        for (const auto& code : item.alignment.phon) {
            if (code == kPadPhoneme) continue;
            if (!first) out += ' ';
            out += code;
            first = false;
        }
        for (const auto& c : weight_columns_) {
            out += '\t';
            if (auto it = item.weights.find(c); it != item.weights.end()) out += detail::format_double(it->second);
        }
        out += '\n';
    }
    return out;
}

ParseResult parse_vocabulary_lenient(std::string_view text, const PhonemeInventory& inventory) {
    static constexpr std::string_view kRequired[] = {"word", "onset", "vowel", "coda", "phonemes"};

    ParseResult result;
    std::vector<WordItem> items;
    std::map<std::string, std::size_t, std::less<>> seen;
    std::vector<std::string> header;
    std::size_t line_no = 0;

    for (std::string_view raw : detail::split_lines(text)) {
        ++line_no;
        if (detail::is_blank_or_comment(raw)) continue;
        auto fields = detail::split_fields(raw);
        if (header.empty()) {
            for (auto f : fields) header.emplace_back(detail::trim(f));
            if (header.size() < 5 || !std::equal(std::begin(kRequired), std::end(kRequired), header.begin())) {
                throw DataError("vocabulary header must start with: word, onset, vowel, coda, phonemes");
            }
            for (std::size_t i = 5; i < header.size(); ++i) {
                if (header[i].empty()) throw DataError("empty weight column name in header");
            }
            continue;
        }
        if (fields.size() > header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": more fields than header columns");
        }
        fields.resize(header.size(), std::string_view{});

        std::string word(detail::trim(fields[0]));
        std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });

        std::map<std::string, double> weights;
        for (std::size_t i = 5; i < header.size(); ++i) {
            const auto cell = detail::trim(fields[i]);
            if (cell.empty()) continue;
            auto value = detail::parse_double(cell);
            if (!value || !std::isfinite(*value) || *value < 0.0) {
                throw DataError("line " + std::to_string(line_no) + ": weight '" + header[i] +
                                "' must be a nonnegative number, got '" + std::string(cell) + "'");
            }
            weights.emplace(header[i], *value);
        }

        try {
            if (seen.contains(word)) {
                throw DataError("duplicate word (first seen on line " + std::to_string(seen.find(word)->second) + ")");
            }
            std::optional<Segmentation> seg;
            const auto onset = detail::trim(fields[1]);
            const auto vowel = detail::trim(fields[2]);
            const auto coda = detail::trim(fields[3]);
            if (!onset.empty() || !vowel.empty() || !coda.empty()) {
                seg = Segmentation{std::string(onset), std::string(vowel), std::string(coda)};
            }
            std::vector<std::string> codes;
            for (auto tok : detail::split_whitespace(fields[4])) codes.emplace_back(tok);
            WordItem item = make_word_item(word, codes, inventory, seg);
            item.weights = std::move(weights);
            seen.emplace(word, line_no);
            items.push_back(std::move(item));
        } catch (const DataError& e) {
            result.rejected.push_back(RowError{line_no, word, e.what()});
        }
    }
    result.vocabulary = Vocabulary(inventory, std::move(items));
    return result;
}

Vocabulary parse_vocabulary(std::string_view text, const PhonemeInventory& inventory) {
    auto result = parse_vocabulary_lenient(text, inventory);
    if (!result.rejected.empty()) {
        const auto& r = result.rejected.front();
        throw DataError("line " + std::to_string(r.line) + " ('" + r.word + "'): " + r.message);
    }
    return std::move(result.vocabulary);
}

// ---------------------------------------------------------------------------
// Splits

PoolSplit split_vocabulary(std::size_t vocab_size, std::size_t pool_size, std::uint64_t seed) {
    if (pool_size == 0 || pool_size >= vocab_size) {
        throw UsageError("pool size K=" + std::to_string(pool_size) + " must satisfy 0 < K < |V|=" +
                         std::to_string(vocab_size));
    }
    std::vector<std::size_t> perm(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) perm[i] = i;
    Rng rng(derive_seed(seed, {0x5917}));
    for (std::size_t i = 0; i < pool_size; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(vocab_size - i));
        std::swap(perm[i], perm[j]);
    }
    PoolSplit split;
    split.pool.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(pool_size));
    split.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(pool_size), perm.end());
    std::sort(split.pool.begin(), split.pool.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

// ---------------------------------------------------------------------------
// Synthetic lexicon

namespace {

constexpr SyntheticGrapheme kConsonants[] = {
    {"t", "t"}, {"n", "n"}, {"s", "s"}, {"r", "r"}, {"l", "l"}, {"d", "d"},
    {"m", "m"}, {"p", "p"}, {"k", "k"}, {"b", "b"}, {"g", "g"}, {"f", "f"},
    {"v", "v"}, {"z", "z"}, {"h", "h"}, {"w", "w"}, {"j", "J"}, {"c", "k"},
};

constexpr SyntheticGrapheme kVowels[] = {
    {"a", "@"},  {"e", "E"},  {"i", "I"},  {"o", "a"},  {"u", "^"},  {"ee", "i"}, {"oa", "o"},
    {"ai", "e"}, {"oo", "u"}, {"ou", "W"}, {"ie", "Y"}, {"oi", "O"}, {"au", "c"}, {"ea", "i"},
};

enum class Shape { CVC, CCVC, CVCC };

}  // namespace

std::span<const SyntheticGrapheme> synthetic_consonants() { return kConsonants; }
std::span<const SyntheticGrapheme> synthetic_vowels() { return kVowels; }

std::size_t synthetic_capacity(const SyntheticSpec& spec) {
    const std::size_t c = spec.n_consonants;
    const std::size_t v = spec.n_vowel_graphemes;
    // clusters never repeat a letter
    const std::size_t pairs = c * (c > 0 ? c - 1 : 0);
    return v * (c * c + 2 * pairs * c);
}

Vocabulary generate_synthetic_vocabulary(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.n_words == 0 || spec.n_consonants == 0 || spec.n_vowel_graphemes == 0) {
        throw UsageError("synthetic vocabulary counts must be positive");
    }
    if (spec.n_consonants > std::size(kConsonants)) {
        throw UsageError("at most " + std::to_string(std::size(kConsonants)) + " synthetic consonants available");
    }
    if (spec.n_vowel_graphemes > std::size(kVowels)) {
        throw UsageError("at most " + std::to_string(std::size(kVowels)) + " synthetic vowel graphemes available");
    }
    if (!(spec.exception_rate >= 0.0 && spec.exception_rate <= 1.0)) {
        throw UsageError("exception_rate must lie in [0, 1]");
    }
    if (!(spec.zipf_exponent >= 0.0) || !std::isfinite(spec.zipf_exponent)) {
        throw UsageError("zipf_exponent must be a nonnegative number");
    }
    if (spec.n_words > synthetic_capacity(spec)) {
        throw UsageError("n_words=" + std::to_string(spec.n_words) + " exceeds the " +
                         std::to_string(synthetic_capacity(spec)) + " distinct words this spec can produce");
    }

    const std::size_t nc = spec.n_consonants;
    const std::size_t nv = spec.n_vowel_graphemes;
    Rng rng(derive_seed(seed, {0x5e7}));

    // Every candidate is encoded as (shape, c1, c2, c3, v) over letter indices.
    struct Candidate {
        Shape shape;
        std::uint8_t c1, c2, c3, v;
    };
    std::vector<Candidate> buckets[3];
    for (std::uint8_t v = 0; v < nv; ++v) {
        for (std::uint8_t a = 0; a < nc; ++a) {
            for (std::uint8_t b = 0; b < nc; ++b) {
                buckets[0].push_back({Shape::CVC, a, b, 0, v});
                if (a == b) continue;
                for (std::uint8_t c = 0; c < nc; ++c) {
                    buckets[1].push_back({Shape::CCVC, a, b, c, v});
                    buckets[2].push_back({Shape::CVCC, c, a, b, v});
                }
            }
        }
    }
    // Draw shapes with weights 0.4/0.3/0.3, uniformly within a shape, without
    // replacement (partial Fisher-Yates inside each bucket).
    const double shape_weight[3] = {0.4, 0.3, 0.3};
    std::size_t used[3] = {0, 0, 0};
    std::vector<Candidate> chosen;
    chosen.reserve(spec.n_words);
    while (chosen.size() < spec.n_words) {
        double total = 0.0;
        for (int s = 0; s < 3; ++s) {
            if (used[s] < buckets[s].size()) total += shape_weight[s];
        }
        double u = rng.uniform() * total;
        int shape = 2;
        for (int s = 0; s < 3; ++s) {
            if (used[s] >= buckets[s].size()) continue;
            if (u < shape_weight[s]) {
                shape = s;
                break;
            }
            u -= shape_weight[s];
        }
        while (used[shape] >= buckets[shape].size()) shape = (shape + 2) % 3;
        auto& bucket = buckets[shape];
        const std::size_t j = used[shape] + static_cast<std::size_t>(rng.below(bucket.size() - used[shape]));
        std::swap(bucket[used[shape]], bucket[j]);
        chosen.push_back(bucket[used[shape]++]);
    }

    // Exceptions: a fixed-size random subset of words gets a non-canonical vowel.
    std::vector<std::string> vowel_codes;
    for (std::size_t v = 0; v < nv; ++v) {
        std::string code(kVowels[v].phoneme);
        if (std::find(vowel_codes.begin(), vowel_codes.end(), code) == vowel_codes.end()) vowel_codes.push_back(code);
    }
    if (vowel_codes.size() < 2) {
        for (const auto& g : kVowels) {
            std::string code(g.phoneme);
            if (std::find(vowel_codes.begin(), vowel_codes.end(), code) == vowel_codes.end()) vowel_codes.push_back(code);
        }
    }
    const auto n_exceptions = static_cast<std::size_t>(std::llround(spec.exception_rate * static_cast<double>(spec.n_words)));
    std::vector<std::size_t> order(spec.n_words);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < n_exceptions; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
        std::swap(order[i], order[j]);
    }
    std::vector<char> is_exception(spec.n_words, 0);
    for (std::size_t i = 0; i < n_exceptions; ++i) is_exception[order[i]] = 1;

    // Zipf frequencies over a random rank permutation.
    std::vector<std::size_t> rank(spec.n_words);
    for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = i + 1;
    for (std::size_t i = rank.size(); i > 1; --i) {
        std::swap(rank[i - 1], rank[static_cast<std::size_t>(rng.below(i))]);
    }

    const auto& inventory = PhonemeInventory::builtin_english();
    std::vector<WordItem> items;
    items.reserve(spec.n_words);
    for (std::size_t w = 0; w < chosen.size(); ++w) {
        const Candidate& c = chosen[w];
        Segmentation seg;
        std::vector<std::string> onset_ph, coda_ph;
        auto push = [&](std::string& letters, std::vector<std::string>& ph, std::uint8_t idx) {
            letters += kConsonants[idx].grapheme;
            ph.emplace_back(kConsonants[idx].phoneme);
        };
        switch (c.shape) {
            case Shape::CVC:
                push(seg.onset, onset_ph, c.c1);
                push(seg.coda, coda_ph, c.c2);
                break;
            case Shape::CCVC:
                push(seg.onset, onset_ph, c.c1);
                push(seg.onset, onset_ph, c.c2);
                push(seg.coda, coda_ph, c.c3);
                break;
            case Shape::CVCC:
                push(seg.onset, onset_ph, c.c1);
                push(seg.coda, coda_ph, c.c2);
                push(seg.coda, coda_ph, c.c3);
                break;
        }
        seg.vowel = std::string(kVowels[c.v].grapheme);
        std::string vowel_ph(kVowels[c.v].phoneme);
        if (is_exception[w]) {
            std::vector<std::string> alternatives;
            for (const auto& code : vowel_codes) {
                if (code != vowel_ph) alternatives.push_back(code);
            }
            vowel_ph = alternatives[static_cast<std::size_t>(rng.below(alternatives.size()))];
        }
        std::vector<std::string> phonemes = onset_ph;
        phonemes.push_back(vowel_ph);
        phonemes.insert(phonemes.end(), coda_ph.begin(), coda_ph.end());

        const std::string word = seg.onset + seg.vowel + seg.coda;
        WordItem item = make_word_item(word, phonemes, inventory, seg);
        const double freq = 1.0e6 / std::pow(static_cast<double>(rank[w]), spec.zipf_exponent);
        item.weights.emplace("freq", detail::round_significant(freq, 6));
        items.push_back(std::move(item));
    }
    return Vocabulary(inventory, std::move(items));
}

}  // namespace seqteach
