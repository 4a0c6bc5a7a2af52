#include <bit>
#include <cmath>
#include <cstring>

#include "toxscreen/error.hpp"
#include "toxscreen/sae_train.hpp"
#include "toxscreen/text_io.hpp"

namespace toxscreen {
namespace {

template <class U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  template <class U>
  U get() {
    if (pos_ + sizeof(U) > bytes_.size()) fail(ErrorKind::length, source_ + ": truncated checkpoint");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const SaeModel& model) {
  const SaeShape& s = model.shape();
  std::vector<std::uint8_t> out;
  out.reserve(48 + 4 * model.params.parameter_count());
  out.insert(out.end(), {'S', 'A', 'E', '1'});
  put_le<std::uint32_t>(out, kSaeVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.input_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.reduction));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.hidden));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.latent));
  put_le<std::uint64_t>(out, model.best_epoch);
  put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(model.best_val_mse));
  for (const auto* layer : model.params.layers()) {
    for (float w : layer->weight) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(w));
    for (float b : layer->bias) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(b));
  }
  return out;
}

SaeModel decode_checkpoint(std::span<const std::uint8_t> bytes, std::string_view source_name) {
  const std::string src(source_name);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "SAE1", 4) != 0) {
    fail(ErrorKind::format, src + ": bad magic (expected SAE1)");
  }
  Reader in(bytes.subspan(4), src);
  const auto version = in.get<std::uint32_t>();
  if (version != kSaeVersion) fail(ErrorKind::format, src + ": unsupported checkpoint version " + std::to_string(version));
  SaeShape shape;
  shape.input_dim = in.get<std::uint32_t>();
  shape.reduction = in.get<std::uint32_t>();
  shape.hidden = in.get<std::uint32_t>();
  shape.latent = in.get<std::uint32_t>();
  try {
    shape.validate();
  } catch (const Error& e) {
    fail(ErrorKind::format, src + ": " + e.what());
  }
  SaeModel model;
  model.best_epoch = in.get<std::uint64_t>();
  model.best_val_mse = std::bit_cast<double>(in.get<std::uint64_t>());
  model.params = SaeParams<float>(shape);
  const std::size_t expected = 4 * model.params.parameter_count();
  if (in.remaining() != expected) {
    fail(ErrorKind::length, src + ": " + std::to_string(in.remaining()) + " parameter bytes, shape implies " +
                                std::to_string(expected));
  }
  for (auto* layer : model.params.layers()) {
    for (float& w : layer->weight) w = std::bit_cast<float>(in.get<std::uint32_t>());
    for (float& b : layer->bias) b = std::bit_cast<float>(in.get<std::uint32_t>());
  }
  if (!model.params.all_finite()) fail(ErrorKind::data, src + ": non-finite parameter");
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const SaeModel& model) {
  write_bytes(path, encode_checkpoint(model));
}

SaeModel load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return decode_checkpoint(bytes, path.string());
}

}  // namespace toxscreen
