#include "structalign/neural/checkpoint.hpp"

#include <charconv>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "structalign/binary_io.hpp"
#include "structalign/error.hpp"

namespace structalign::neural {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  T v{};
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParseError(0, "bad value for " + key + ": \"" + text + "\"");
  }
  return v;
}

double parse_double(const std::string& text, const std::string& key) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  return parse_number<double>(text, key);
}

template <std::size_t N>
std::string join(const std::array<int, N>& values) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) s += ',';
    s += std::to_string(values[i]);
  }
  return s;
}

template <std::size_t N>
std::array<int, N> split_ints(const std::string& text, const std::string& key) {
  std::array<int, N> out{};
  std::size_t start = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t comma = text.find(',', start);
    const bool last = i + 1 == N;
    if (last != (comma == std::string::npos)) {
      throw ParseError(0, "expected " + std::to_string(N) + " values for " + key);
    }
    out[i] = parse_number<int>(text.substr(start, comma - start), key);
    start = comma + 1;
  }
  return out;
}

void write_tensors(io::ByteWriter& w, const TensorList<float>& tensors) {
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.text(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    for (float v : t.data) w.f32(v);
  }
}

TensorList<float> read_tensors(io::ByteReader& r) {
  const std::uint32_t count = r.u32();
  if (count > 4096) throw ParseError(r.offset(), "implausible tensor count");
  TensorList<float> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor<float> t;
    const std::uint32_t name_len = r.u32();
    const auto name = r.bytes(name_len, "tensor name");
    t.name.assign(name.begin(), name.end());
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw ParseError(r.offset(), "implausible tensor rank");
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const std::uint32_t d = r.u32();
      t.shape.push_back(static_cast<int>(d));
      n *= d;
    }
    if (n > r.remaining() / 4) throw ParseError(r.offset(), "tensor " + t.name + " is truncated");
    t.data.resize(n);
    for (auto& v : t.data) v = r.f32();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

ModelCheckpoint ModelCheckpoint::from_model(const DilatedCnn<float>& model, int epoch,
                                            double best_validation_loss) {
  return ModelCheckpoint{model.config(), model.parameters(), model.buffers(), epoch,
                         best_validation_loss};
}

DilatedCnn<float> ModelCheckpoint::to_model() const {
  return DilatedCnn<float>(config, parameters, buffers);
}

std::vector<std::uint8_t> encode_checkpoint(const ModelCheckpoint& ck) {
  const ModelConfig& c = ck.config;
  std::ostringstream meta;
  meta << "version=" << kCheckpointVersion << '\n'
       << "name=" << c.name() << '\n'
       << "input_size=" << c.input_size << '\n'
       << "dilation_layer2=" << c.dilation_layer2 << '\n'
       << "dilation_layer3=" << c.dilation_layer3 << '\n'
       << "channels=" << join(c.channels) << '\n'
       << "kernel_sizes=" << join(c.kernel_sizes) << '\n'
       << "fc_sizes=" << join(c.fc_sizes) << '\n'
       << "output_dim=" << c.output_dim << '\n'
       << "dropout_p=" << format_double(c.dropout_p) << '\n'
       << "bn_momentum=" << format_double(c.bn_momentum) << '\n'
       << "bn_eps=" << format_double(c.bn_eps) << '\n'
       << "epoch=" << ck.epoch << '\n'
       << "best_validation_loss=" << format_double(ck.best_validation_loss) << '\n';
  const std::string text = meta.str();

  io::ByteWriter w;
  w.text("DCNN1");
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.text(text);
  write_tensors(w, ck.parameters);
  write_tensors(w, ck.buffers);
  return std::move(w).take();
}

ModelCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic("DCNN1");
  const std::uint32_t text_len = r.u32();
  const std::size_t text_offset = r.offset();
  const auto raw = r.bytes(text_len, "config block");
  const std::string text(raw.begin(), raw.end());

  std::map<std::string, std::string> kv;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(text_offset, "config line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(text_offset, "config block lacks " + key);
    return it->second;
  };
  if (parse_number<int>(get("version"), "version") != kCheckpointVersion) {
    throw UnsupportedFormatError("unsupported DCNN1 version " + get("version"));
  }

  ModelCheckpoint ck;
  ModelConfig& c = ck.config;
  c.input_size = parse_number<int>(get("input_size"), "input_size");
  c.dilation_layer2 = parse_number<int>(get("dilation_layer2"), "dilation_layer2");
  c.dilation_layer3 = parse_number<int>(get("dilation_layer3"), "dilation_layer3");
  c.channels = split_ints<3>(get("channels"), "channels");
  c.kernel_sizes = split_ints<3>(get("kernel_sizes"), "kernel_sizes");
  c.fc_sizes = split_ints<2>(get("fc_sizes"), "fc_sizes");
  c.output_dim = parse_number<int>(get("output_dim"), "output_dim");
  c.dropout_p = parse_double(get("dropout_p"), "dropout_p");
  c.bn_momentum = parse_double(get("bn_momentum"), "bn_momentum");
  c.bn_eps = parse_double(get("bn_eps"), "bn_eps");
  ck.epoch = parse_number<int>(get("epoch"), "epoch");
  ck.best_validation_loss = parse_double(get("best_validation_loss"), "best_validation_loss");
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw ParseError(text_offset, std::string("invalid model config: ") + e.what());
  }

  ck.parameters = read_tensors(r);
  ck.buffers = read_tensors(r);
  if (!r.at_end()) throw ParseError(r.offset(), "trailing bytes after checkpoint");
  // Shape consistency with the config.
  (void)ck.to_model();
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint) {
  io::write_file(path, encode_checkpoint(checkpoint));
}

ModelCheckpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

}  // namespace structalign::neural
