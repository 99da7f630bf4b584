#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "switchnet/bits.hpp"

namespace switchnet {

/// Explicit distribution over {0,1}^n. probs[config_index(x)] = p(x), with
/// x_1 the most significant bit of the index.
class DistributionTable {
 public:
  static constexpr std::size_t kMaxDim = 20;

  DistributionTable() = default;
  /// Checks size 2^n, nonnegativity and normalization within `tolerance`.
  DistributionTable(std::size_t n, std::vector<double> probs, double tolerance = 1e-9);

  std::size_t n() const { return n_; }
  std::span<const double> probs() const { return probs_; }
  double operator[](std::uint64_t index) const { return probs_[index]; }
  double prob(BitSpan x) const { return probs_[config_index(x)]; }

  bool operator==(const DistributionTable&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> probs_;
};

/// I binary rows of common length n, stored contiguously.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t n, std::string provenance = {});

  std::size_t n() const { return n_; }
  std::size_t size() const { return n_ == 0 ? 0 : bits_.size() / n_; }
  bool empty() const { return bits_.empty(); }

  BitSpan row(std::size_t i) const { return BitSpan(bits_).subspan(i * n_, n_); }
  /// Throws ContractError when the row length differs from n.
  void add_row(BitSpan row);
  void reserve(std::size_t rows) { bits_.reserve(rows * n_); }

  const std::string& provenance() const { return provenance_; }
  void set_provenance(std::string p) { provenance_ = std::move(p); }

  std::span<const Bit> bits() const { return bits_; }

  bool operator==(const Dataset&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<Bit> bits_;
  std::string provenance_;
};

// --- synthetic ----------------------------------------------------------------

/// 2^n i.i.d. uniform draws on [0.1, 1], normalized.
DistributionTable gen_synthetic(std::size_t n, std::uint64_t seed);

/// `count` i.i.d. draws from the table.
Dataset sample_from_table(const DistributionTable& table, std::size_t count, std::uint64_t seed);

/// The empirical distribution of a dataset (n <= 20).
DistributionTable empirical_table(const Dataset& data);

// --- MNIST --------------------------------------------------------------------

struct MnistOptions {
  int threshold = 150;         // pixel > threshold becomes 1
  std::size_t crop = 0;        // side of the centered square kept (0 = whole image)
  std::size_t downsample = 1;  // average f x f pixel blocks before thresholding
  std::size_t limit = 0;       // keep at most this many images (0 = all)
};

/// Raw IDX3 image tensor (big-endian header, magic 0x00000803). Gzipped
/// files are detected and inflated transparently.
struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

IdxImages read_idx_images(const std::filesystem::path& path);
/// IDX1 labels (magic 0x00000801).
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

void write_idx_images(const std::filesystem::path& path, const IdxImages& images);

/// Binarizes images row-major, rows top to bottom: bit r * width + c is pixel
/// (r, c) of the (cropped, downsampled) image.
Dataset binarize_images(const IdxImages& images, const MnistOptions& options = {});

Dataset load_mnist_binary(const std::filesystem::path& images_path,
                          const MnistOptions& options = {});

// --- words --------------------------------------------------------------------

inline constexpr std::size_t kWordChars = 8;
inline constexpr std::size_t kBitsPerChar = 5;
inline constexpr std::size_t kWordBits = kWordChars * kBitsPerChar;

/// Space -> 0, a..z -> 1..26, five bits MSB first per character, padded with
/// trailing spaces to eight characters. Throws ContractError on anything else.
Bits encode_word(std::string_view word);

/// Inverse of encode_word; codes 27..31 decode to '?'. Trailing spaces are
/// stripped. Total on any 40-bit vector.
std::string decode_bits(BitSpan bits);

/// One word per line; blank lines skipped, surrounding whitespace trimmed.
std::vector<std::string> read_word_list(const std::filesystem::path& path);

Dataset words_dataset(std::span<const std::string> words, std::string provenance = {});

// --- file formats -------------------------------------------------------------

/// "switchnet-dataset v1 n=<n> count=<I> [source=<tag>]" then one 0/1 line per row.
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
std::string dataset_to_string(const Dataset& data);
Dataset dataset_from_string(std::string_view text);

/// "switchnet-dist v1 n=<n>" then 2^n shortest round-trip decimal probabilities.
void save_table(const DistributionTable& table, const std::filesystem::path& path);
DistributionTable load_table(const std::filesystem::path& path);

}  // namespace switchnet
