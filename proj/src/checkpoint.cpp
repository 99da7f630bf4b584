#include "switchnet/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "switchnet/error.hpp"
#include "switchnet/io.hpp"

namespace switchnet {

namespace {

constexpr std::string_view kMagic = "SWNETCKP";

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(bytes, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T))
      throw DataError(std::string("checkpoint truncated while reading ") + what);
    char bytes[sizeof(T)];
    std::memcpy(bytes, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const SwitchNetworkModel& model) {
  const auto& arch = model.architecture();
  std::string out(kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.kind));
  put<std::uint64_t>(out, model.n());
  put<std::uint64_t>(out, arch.is_two_layer() ? arch.m1 : arch.m);
  put<std::uint64_t>(out, arch.l);
  put<std::uint64_t>(out, arch.m2);
  for (const auto& cm : model.conditionals())
    for (const auto& block : cm.blocks())
      for (double v : block.values()) put<double>(out, v);
  put<std::uint32_t>(out, crc32(out));
  return out;
}

SwitchNetworkModel deserialize_model(std::string_view bytes) {
  if (bytes.empty()) throw DataError("checkpoint is empty");
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic)
    throw DataError("not a switchnet checkpoint (bad magic)");
  Reader in(bytes.substr(kMagic.size()));
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw DataError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");

  if (bytes.size() < kMagic.size() + 4)
    throw DataError("checkpoint truncated");
  const std::uint32_t stored_crc = [&] {
    Reader tail(bytes.substr(bytes.size() - 4));
    return tail.get<std::uint32_t>("checksum");
  }();

  const auto kind = in.get<std::uint32_t>("architecture");
  const auto n = in.get<std::uint64_t>("n");
  const auto width = in.get<std::uint64_t>("m");
  const auto l = in.get<std::uint64_t>("l");
  const auto m2 = in.get<std::uint64_t>("m2");

  Architecture arch;
  if (kind == static_cast<std::uint32_t>(Architecture::Kind::single_layer))
    arch = Architecture::single(width);
  else if (kind == static_cast<std::uint32_t>(Architecture::Kind::two_layer))
    arch = Architecture::two(width, l, m2);
  else
    throw DataError("checkpoint has unknown architecture kind " + std::to_string(kind));
  if (kind == 1 && (l != 0 || m2 != 0)) throw DataError("corrupt single-layer checkpoint header");
  try {
    arch.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }
  if (n == 0) throw DataError("checkpoint declares n = 0");

  // Size check before allocating anything proportional to the header values.
  const long double per_block_first = 2.0L * (arch.is_two_layer() ? arch.m1 : arch.m);
  long double expected_values = 0;
  for (std::uint64_t k = 0; k < n; ++k) {
    if (arch.is_two_layer())
      expected_values += arch.l * per_block_first * (k + 1) + 2.0L * arch.m2 * (arch.l + 1);
    else
      expected_values += per_block_first * (k + 1);
    if (expected_values * 8 > in.remaining()) break;
  }
  if (expected_values * 8 + 4 != static_cast<long double>(in.remaining()))
    throw DataError("checkpoint size does not match its header (truncated or corrupt)");

  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  if (crc32(body) != stored_crc) throw DataError("checkpoint checksum mismatch");

  SwitchNetworkModel model(n, arch);
  for (auto& cm : model.conditionals())
    for (auto& block : cm.blocks())
      for (double& v : block.values()) v = in.get<double>("parameters");
  return model;
}

void save_checkpoint(const SwitchNetworkModel& model, const std::filesystem::path& path) {
  atomic_write(path, serialize_model(model));
}

SwitchNetworkModel load_checkpoint(const std::filesystem::path& path) {
  return deserialize_model(read_file(path));
}

}  // namespace switchnet
