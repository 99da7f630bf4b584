#include "switchnet/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "switchnet/error.hpp"
#include "switchnet/io.hpp"
#include "switchnet/random.hpp"

namespace switchnet {

// --- DistributionTable / Dataset ----------------------------------------------

DistributionTable::DistributionTable(std::size_t n, std::vector<double> probs, double tolerance)
    : n_(n), probs_(std::move(probs)) {
  if (n == 0 || n > kMaxDim)
    throw ContractError("distribution table dimension must be in [1, 20], got " + std::to_string(n));
  if (probs_.size() != (std::size_t{1} << n))
    throw ContractError("distribution table needs 2^n entries");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ContractError("probabilities must be finite and >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > tolerance)
    throw ContractError("probabilities sum to " + format_double(total) + ", not 1");
}

Dataset::Dataset(std::size_t n, std::string provenance) : n_(n), provenance_(std::move(provenance)) {
  if (n == 0) throw ContractError("dataset dimension must be positive");
}

void Dataset::add_row(BitSpan row) {
  if (row.size() != n_)
    throw ContractError("row has length " + std::to_string(row.size()) + ", dataset expects " +
                        std::to_string(n_));
  for (Bit b : row) bits_.push_back(b ? 1 : 0);
}

// --- synthetic ----------------------------------------------------------------

DistributionTable gen_synthetic(std::size_t n, std::uint64_t seed) {
  if (n < 1 || n > DistributionTable::kMaxDim)
    throw ContractError("synthetic dimension must be in [1, 20], got " + std::to_string(n));
  Rng rng(seed);
  std::vector<double> weights(std::size_t{1} << n);
  for (double& w : weights) w = uniform(rng, 0.1, 1.0);
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
  return DistributionTable(n, std::move(weights), 1e-12);
}

Dataset sample_from_table(const DistributionTable& table, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ContractError("sample count must be >= 1");
  const auto probs = table.probs();
  std::vector<double> cdf(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cdf.begin());

  Dataset data(table.n(), "synthetic:n=" + std::to_string(table.n()) +
                              ":count=" + std::to_string(count) + ":seed=" + std::to_string(seed));
  data.reserve(count);
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = uniform01(rng) * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto index = static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(
        it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    data.add_row(config_bits(index, table.n()));
  }
  return data;
}

DistributionTable empirical_table(const Dataset& data) {
  if (data.empty()) throw ContractError("empirical distribution of an empty dataset");
  if (data.n() > DistributionTable::kMaxDim) throw ContractError("dataset too wide for a table");
  std::vector<double> counts(std::size_t{1} << data.n(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) counts[config_index(data.row(i))] += 1.0;
  for (double& c : counts) c /= static_cast<double>(data.size());
  return DistributionTable(data.n(), std::move(counts));
}

// --- IDX ----------------------------------------------------------------------

namespace {

std::string read_maybe_gzip(const std::filesystem::path& path) {
  gzFile file = gzopen(path.string().c_str(), "rb");
  if (!file) throw DataError("cannot open " + path.string());
  std::string out;
  char buf[1 << 16];
  int got;
  while ((got = gzread(file, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(got));
  const bool failed = got < 0;
  gzclose(file);
  if (failed) throw DataError("corrupt compressed stream in " + path.string());
  return out;
}

std::uint32_t read_be32(std::string_view bytes, std::size_t offset) {
  return (std::uint32_t{static_cast<std::uint8_t>(bytes[offset])} << 24) |
         (std::uint32_t{static_cast<std::uint8_t>(bytes[offset + 1])} << 16) |
         (std::uint32_t{static_cast<std::uint8_t>(bytes[offset + 2])} << 8) |
         std::uint32_t{static_cast<std::uint8_t>(bytes[offset + 3])};
}

void append_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
  const std::string bytes = read_maybe_gzip(path);
  if (bytes.size() < 16) throw DataError(path.string() + ": truncated IDX3 header");
  if (read_be32(bytes, 0) != 0x00000803u)
    throw DataError(path.string() + ": bad IDX3 magic number");
  IdxImages images;
  images.count = read_be32(bytes, 4);
  images.rows = read_be32(bytes, 8);
  images.cols = read_be32(bytes, 12);
  const std::size_t expected = images.count * images.rows * images.cols;
  if (bytes.size() - 16 < expected)
    throw DataError(path.string() + ": truncated IDX3 payload (expected " + std::to_string(expected) +
                    " pixel bytes, found " + std::to_string(bytes.size() - 16) + ")");
  images.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(expected));
  return images;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const std::string bytes = read_maybe_gzip(path);
  if (bytes.size() < 8) throw DataError(path.string() + ": truncated IDX1 header");
  if (read_be32(bytes, 0) != 0x00000801u)
    throw DataError(path.string() + ": bad IDX1 magic number");
  const std::size_t count = read_be32(bytes, 4);
  if (bytes.size() - 8 < count) throw DataError(path.string() + ": truncated IDX1 payload");
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  if (images.pixels.size() != images.count * images.rows * images.cols)
    throw ContractError("IDX image tensor size does not match its dimensions");
  std::string out;
  append_be32(out, 0x00000803u);
  append_be32(out, static_cast<std::uint32_t>(images.count));
  append_be32(out, static_cast<std::uint32_t>(images.rows));
  append_be32(out, static_cast<std::uint32_t>(images.cols));
  out.append(images.pixels.begin(), images.pixels.end());
  atomic_write(path, out);
}

Dataset binarize_images(const IdxImages& images, const MnistOptions& options) {
  // crop == 0 keeps the whole (possibly non-square) image
  const std::size_t height = options.crop == 0 ? images.rows : options.crop;
  const std::size_t width = options.crop == 0 ? images.cols : options.crop;
  const std::size_t factor = options.downsample;
  if (height > images.rows || width > images.cols)
    throw ContractError("crop size must be at most " + std::to_string(std::min(images.rows, images.cols)));
  if (factor == 0 || height % factor != 0 || width % factor != 0)
    throw ContractError("downsample factor must divide the image side");
  const std::size_t out_rows = height / factor;
  const std::size_t out_cols = width / factor;
  const std::size_t top = (images.rows - height) / 2;
  const std::size_t left = (images.cols - width) / 2;
  const std::size_t count =
      options.limit == 0 ? images.count : std::min(images.count, options.limit);
  if (count == 0 || out_rows * out_cols == 0) throw DataError("no pixels to binarize");

  std::ostringstream tag;
  tag << "mnist:threshold=" << options.threshold << ":crop=" << height << "x" << width
      << ":downsample=" << factor << ":count=" << count;
  Dataset data(out_rows * out_cols, tag.str());
  data.reserve(count);
  Bits row(out_rows * out_cols);
  const double area = static_cast<double>(factor * factor);
  for (std::size_t img = 0; img < count; ++img) {
    const std::uint8_t* pixels = images.pixels.data() + img * images.rows * images.cols;
    for (std::size_t r = 0; r < out_rows; ++r) {
      for (std::size_t c = 0; c < out_cols; ++c) {
        double sum = 0.0;
        for (std::size_t dr = 0; dr < factor; ++dr)
          for (std::size_t dc = 0; dc < factor; ++dc)
            sum += pixels[(top + r * factor + dr) * images.cols + left + c * factor + dc];
        row[r * out_cols + c] = sum / area > options.threshold ? 1 : 0;
      }
    }
    data.add_row(row);
  }
  return data;
}

Dataset load_mnist_binary(const std::filesystem::path& images_path, const MnistOptions& options) {
  return binarize_images(read_idx_images(images_path), options);
}

// --- words --------------------------------------------------------------------

Bits encode_word(std::string_view word) {
  if (word.size() > kWordChars)
    throw ContractError("word '" + std::string(word) + "' is longer than 8 characters");
  Bits bits(kWordBits, 0);
  for (std::size_t i = 0; i < word.size(); ++i) {
    const char ch = word[i];
    unsigned code;
    if (ch == ' ')
      code = 0;
    else if (ch >= 'a' && ch <= 'z')
      code = static_cast<unsigned>(ch - 'a') + 1;
    else
      throw ContractError("word '" + std::string(word) + "' has a character outside [a-z ]");
    for (std::size_t b = 0; b < kBitsPerChar; ++b)
      bits[i * kBitsPerChar + b] = static_cast<Bit>((code >> (kBitsPerChar - 1 - b)) & 1u);
  }
  return bits;
}

std::string decode_bits(BitSpan bits) {
  if (bits.size() != kWordBits)
    throw ContractError("word vectors have 40 bits, got " + std::to_string(bits.size()));
  std::string word;
  for (std::size_t i = 0; i < kWordChars; ++i) {
    unsigned code = 0;
    for (std::size_t b = 0; b < kBitsPerChar; ++b) code = (code << 1) | (bits[i * kBitsPerChar + b] ? 1u : 0u);
    if (code == 0)
      word.push_back(' ');
    else if (code <= 26)
      word.push_back(static_cast<char>('a' + code - 1));
    else
      word.push_back('?');
  }
  word.erase(word.find_last_not_of(' ') + 1);
  return word;
}

std::vector<std::string> read_word_list(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string word = line.substr(first, last - first + 1);
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.push_back(std::move(word));
  }
  return words;
}

Dataset words_dataset(std::span<const std::string> words, std::string provenance) {
  Dataset data(kWordBits, std::move(provenance));
  data.reserve(words.size());
  for (const auto& w : words) data.add_row(encode_word(w));
  return data;
}

// --- file formats -------------------------------------------------------------

namespace {

std::string sanitize_tag(const std::string& tag) {
  std::string out = tag;
  for (char& c : out)
    if (std::isspace(static_cast<unsigned char>(c))) c = '_';
  return out;
}

std::string_view field_value(std::string_view token, std::string_view key, std::string_view what) {
  if (token.substr(0, key.size()) != key)
    throw DataError(std::string(what) + ": expected '" + std::string(key) + "...' in header");
  return token.substr(key.size());
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Splits into lines, tolerating a final newline and CRLF endings.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::string dataset_to_string(const Dataset& data) {
  std::string out = "switchnet-dataset v1 n=" + std::to_string(data.n()) +
                    " count=" + std::to_string(data.size());
  if (!data.provenance().empty()) out += " source=" + sanitize_tag(data.provenance());
  out += '\n';
  out.reserve(out.size() + data.size() * (data.n() + 1));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Bit b : data.row(i)) out.push_back(b ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

Dataset dataset_from_string(std::string_view text) {
  constexpr std::string_view what = "dataset file";
  const auto lines = split_lines(text);
  if (lines.empty()) throw DataError("dataset file is empty");
  const auto header = split_ws(lines[0]);
  if (header.size() < 4 || header[0] != "switchnet-dataset")
    throw DataError("not a switchnet dataset file (bad header)");
  if (header[1] != "v1") throw DataError("unsupported dataset format version '" + std::string(header[1]) + "'");
  const auto n = parse_uint(field_value(header[2], "n=", what));
  const auto count = parse_uint(field_value(header[3], "count=", what));
  std::string source;
  if (header.size() >= 5) source = std::string(field_value(header[4], "source=", what));
  if (n == 0) throw DataError("dataset declares n=0");
  if (count == 0) throw DataError("dataset declares zero rows");
  if (lines.size() - 1 != count)
    throw DataError("dataset declares " + std::to_string(count) + " rows but has " +
                    std::to_string(lines.size() - 1));

  Dataset data(n, std::move(source));
  data.reserve(count);
  Bits row(n);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (line.size() != n)
      throw DataError("dataset row " + std::to_string(i) + " has " + std::to_string(line.size()) +
                      " bits, header declares n=" + std::to_string(n));
    for (std::size_t t = 0; t < n; ++t) {
      if (line[t] != '0' && line[t] != '1')
        throw DataError("dataset row " + std::to_string(i) + " has a non-binary character");
      row[t] = line[t] == '1';
    }
    data.add_row(row);
  }
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  if (data.empty()) throw ContractError("refusing to save an empty dataset");
  atomic_write(path, dataset_to_string(data));
}

Dataset load_dataset(const std::filesystem::path& path) { return dataset_from_string(read_file(path)); }

void save_table(const DistributionTable& table, const std::filesystem::path& path) {
  std::string out = "switchnet-dist v1 n=" + std::to_string(table.n()) + "\n";
  for (double p : table.probs()) {
    out += format_double(p);
    out += '\n';
  }
  atomic_write(path, out);
}

DistributionTable load_table(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty()) throw DataError("distribution file is empty");
  const auto header = split_ws(lines[0]);
  if (header.size() != 3 || header[0] != "switchnet-dist")
    throw DataError("not a switchnet distribution file (bad header)");
  if (header[1] != "v1") throw DataError("unsupported distribution format version");
  const auto n = parse_uint(field_value(header[2], "n=", "distribution file"));
  if (n == 0 || n > DistributionTable::kMaxDim) throw DataError("distribution dimension out of range");
  const std::size_t size = std::size_t{1} << n;
  if (lines.size() - 1 != size)
    throw DataError("distribution file needs " + std::to_string(size) + " probabilities, has " +
                    std::to_string(lines.size() - 1));
  std::vector<double> probs(size);
  for (std::size_t i = 0; i < size; ++i) probs[i] = parse_double(lines[i + 1]);
  try {
    return DistributionTable(n, std::move(probs));
  } catch (const ContractError& e) {
    throw DataError(std::string("invalid distribution file: ") + e.what());
  }
}

}  // namespace switchnet
