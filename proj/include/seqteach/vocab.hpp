#pragma once

// Lexicon ingestion and slot-aligned binary encodings.
//
// Orthography occupies 10 letter slots and phonology 8 phoneme slots. The
// first vowel always sits in slot 4 (1-based): onsets are right-aligned
// against it, the orthographic vowel grapheme owns slots 4-5 and codas are
// left-aligned after it.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seqteach {

inline constexpr std::size_t kOrthSlots = 10;
inline constexpr std::size_t kPhonSlots = 8;
inline constexpr std::size_t kAlphabetSize = 26;
inline constexpr std::size_t kFeatureDim = 25;
inline constexpr std::size_t kInputDim = kOrthSlots * kAlphabetSize;  // 260
inline constexpr std::size_t kOutputDim = kPhonSlots * kFeatureDim;   // 200

inline constexpr std::size_t kMaxOnsetLetters = 3;
inline constexpr std::size_t kMaxVowelLetters = 2;
inline constexpr std::size_t kMaxCodaLetters = 5;
inline constexpr std::size_t kMaxOnsetPhonemes = 3;
inline constexpr std::size_t kMaxCodaPhonemes = 4;

inline constexpr char kPadLetter = '_';
inline constexpr std::string_view kPadPhoneme = "_";

using FeatureVector = std::array<std::uint8_t, kFeatureDim>;

struct Phoneme {
    std::string code;
    FeatureVector features{};
    bool vocalic = false;
};

/// The phoneme set M. Entry 0 is always the all-zero padding phoneme "_".
class PhonemeInventory {
public:
    PhonemeInventory();

    /// TSV: `code <tab> 25 binary digits <tab> vocalic flag (0/1)`.
    /// '#' comment lines and blank lines are skipped.
    static PhonemeInventory parse(std::string_view text);

    /// A 40-entry English inventory with hand-assigned articulatory features.
    static const PhonemeInventory& builtin_english();

    void add(Phoneme phoneme);

    std::size_t size() const noexcept { return entries_.size(); }
    const Phoneme& at(std::size_t index) const { return entries_.at(index); }
    std::span<const Phoneme> entries() const noexcept { return entries_; }

    std::optional<std::size_t> find(std::string_view code) const;
    /// Throws DataError for an unknown code.
    std::size_t index_of(std::string_view code) const;

    std::string to_tsv() const;

private:
    std::vector<Phoneme> entries_;
    std::map<std::string, std::size_t, std::less<>> by_code_;
};

/// Onset / vowel-grapheme / coda split of a spelling.
struct Segmentation {
    std::string onset;
    std::string vowel;
    std::string coda;

    friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

struct Alignment {
    std::string orth;                          // kOrthSlots chars, '_' = pad
    std::array<std::string, kPhonSlots> phon;  // codes, "_" = pad

    friend bool operator==(const Alignment&, const Alignment&) = default;
};

/// Heuristic split: vowel letters are a,e,i,o,u, plus y when no earlier vowel
/// letter exists; the vowel grapheme is the run of vowel letters starting at
/// the first vowel, truncated to two letters.
Segmentation segment_spelling(std::string_view spelling);

/// Aligns a spelling and its phoneme codes into slots. The vowel phoneme is
/// identified by the inventory's vocalic flag and must be unique.
Alignment align_word(std::string_view spelling, std::span<const std::string> phonemes,
                     const PhonemeInventory& inventory,
                     const std::optional<Segmentation>& segmentation = std::nullopt);

/// One-hot per non-pad slot at bit (slot-1)*26 + rank(letter), rank(a)=0.
std::vector<std::uint8_t> encode_orthography(std::string_view aligned_orth);
/// Inverse of encode_orthography; throws DataError for a malformed vector.
std::string decode_orthography(std::span<const std::uint8_t> bits);

std::vector<std::uint8_t> encode_phonology(std::span<const std::string> aligned_phon,
                                           const PhonemeInventory& inventory);

struct WordItem {
    std::string word;
    Segmentation segmentation;
    Alignment alignment;
    std::vector<std::uint8_t> o;              // kInputDim bits
    std::vector<std::uint8_t> y;              // kOutputDim bits
    std::vector<std::uint16_t> active_inputs;  // indices of set bits in o
    std::array<std::uint16_t, kPhonSlots> phoneme_index{};  // inventory index per slot
    std::map<std::string, double> weights;     // prevalence columns present for this row

    std::size_t orth_length() const noexcept { return word.size(); }
    std::size_t phon_length() const noexcept;
};

WordItem make_word_item(std::string_view spelling, std::span<const std::string> phonemes,
                        const PhonemeInventory& inventory,
                        const std::optional<Segmentation>& segmentation = std::nullopt);

class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(PhonemeInventory inventory, std::vector<WordItem> items);

    const PhonemeInventory& inventory() const noexcept { return inventory_; }
    std::span<const WordItem> items() const noexcept { return items_; }
    const WordItem& at(std::size_t i) const { return items_.at(i); }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }

    std::optional<std::size_t> find(std::string_view word) const;
    /// Weight column names in first-seen order.
    const std::vector<std::string>& weight_columns() const noexcept { return weight_columns_; }

    /// Serializes to the TSV layout accepted by parse_vocabulary.
    std::string to_tsv() const;

private:
    PhonemeInventory inventory_;
    std::vector<WordItem> items_;
    std::vector<std::string> weight_columns_;
    std::map<std::string, std::size_t, std::less<>> by_word_;
};

/// One failed row of a vocabulary file.
struct RowError {
    std::size_t line = 0;
    std::string word;
    std::string message;
};

struct ParseResult {
    Vocabulary vocabulary;
    std::vector<RowError> rejected;
};

/// Parses the vocabulary TSV. Header columns: word, onset, vowel, coda,
/// phonemes, then any number of named weight columns. onset/vowel/coda may be
/// blank to request the heuristic split; phonemes are space separated. Rows
/// that fail alignment or encoding are collected in `rejected`; structural
/// problems (bad header, duplicate word, negative weight) throw DataError.
ParseResult parse_vocabulary_lenient(std::string_view text, const PhonemeInventory& inventory);

/// Strict variant: throws DataError naming the first rejected row.
Vocabulary parse_vocabulary(std::string_view text, const PhonemeInventory& inventory);

struct PoolSplit {
    std::vector<std::size_t> pool;  // U, sorted ascending
    std::vector<std::size_t> test;  // E = V - U, sorted ascending
};

/// Uniformly random K-subset as the pool, deterministic in seed.
PoolSplit split_vocabulary(std::size_t vocab_size, std::size_t pool_size, std::uint64_t seed);

struct SyntheticSpec {
    std::size_t n_words = 300;
    std::size_t n_consonants = 12;
    std::size_t n_vowel_graphemes = 8;
    double exception_rate = 0.2;
    double zipf_exponent = 1.0;

    friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

/// Letters and canonical phonemes used by the synthetic generator.
struct SyntheticGrapheme {
    std::string_view grapheme;
    std::string_view phoneme;
};
std::span<const SyntheticGrapheme> synthetic_consonants();
std::span<const SyntheticGrapheme> synthetic_vowels();

/// Number of distinct CVC/CCVC/CVCC spellings the spec can produce.
std::size_t synthetic_capacity(const SyntheticSpec& spec);

/// Quasiregular toy lexicon over the builtin inventory. Every grapheme has a
/// canonical phoneme; round(exception_rate * n_words) words get a different
/// vowel phoneme. Adds a Zipf-distributed "freq" weight column.
Vocabulary generate_synthetic_vocabulary(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace seqteach
