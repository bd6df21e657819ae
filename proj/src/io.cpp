#include "beamsel/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "beamsel/binio.hpp"
#include "beamsel/csv.hpp"
#include "beamsel/errors.hpp"

namespace beamsel {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    try {
      writer(out);
    } catch (...) {
      out.close();
      fs::remove(tmp);
      throw;
    }
    out.flush();
    if (!out) {
      fs::remove(tmp);
      throw Error("failed writing " + path.string());
    }
  }
  fs::rename(tmp, path);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, [&](std::ostream& out) { out << text; });
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open " + path.string());
  return in;
}

struct PnmHeader {
  std::string magic;
  std::size_t width = 0, height = 0;
  unsigned maxval = 0;
};

std::size_t read_header_number(std::istream& in, const char* what) {
  int ch = in.peek();
  while (ch != EOF) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
    ch = in.peek();
  }
  if (ch == EOF) throw TruncationError(std::string("PNM header ends before ") + what);
  if (!std::isdigit(ch)) throw FormatError(std::string("PNM header: expected ") + what);
  std::size_t v = 0;
  while (std::isdigit(in.peek())) {
    v = v * 10 + static_cast<std::size_t>(in.get() - '0');
    if (v > 1'000'000) throw FormatError(std::string("PNM header: ") + what + " too large");
  }
  return v;
}

PnmHeader read_pnm_header(std::istream& in) {
  PnmHeader h;
  char m[2];
  if (!in.read(m, 2)) throw TruncationError("PNM file too short for magic");
  h.magic.assign(m, 2);
  if (h.magic != "P5" && h.magic != "P6") throw FormatError("unsupported PNM magic '" + h.magic + "'");
  h.width = read_header_number(in, "width");
  h.height = read_header_number(in, "height");
  h.maxval = static_cast<unsigned>(read_header_number(in, "maxval"));
  if (!std::isspace(in.get())) throw FormatError("PNM header: missing separator before raster");
  if (h.width == 0 || h.height == 0) throw FormatError("PNM image has zero extent");
  if (h.maxval == 0 || h.maxval > 255) {
    throw FormatError("unsupported PNM maxval " + std::to_string(h.maxval) + " (8-bit only)");
  }
  return h;
}

unsigned char to_byte(double v, unsigned maxval) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(c * maxval));
}

nn::Tensor read_raster(std::istream& in, const PnmHeader& h, std::size_t channels) {
  std::vector<unsigned char> buf(h.width * h.height * channels);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw TruncationError("PNM raster shorter than " + std::to_string(buf.size()) + " bytes");
  }
  nn::Tensor t({h.height, h.width, channels});
  for (std::size_t k = 0; k < buf.size(); ++k) {
    if (buf[k] > h.maxval) throw FormatError("PNM sample exceeds maxval");
    t[k] = static_cast<double>(buf[k]) / h.maxval;
  }
  return t;
}

}  // namespace

void write_ppm(std::ostream& out, const Image& img) {
  if (img.rank() != 3 || img.dim(2) != 3) {
    throw DimensionError("PPM needs a (rows, cols, 3) image, got " + nn::shape_string(img.shape()));
  }
  out << "P6\n" << img.dim(1) << ' ' << img.dim(0) << "\n255\n";
  std::vector<unsigned char> buf(img.size());
  for (std::size_t k = 0; k < img.size(); ++k) buf[k] = to_byte(img[k], 255);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

Image read_ppm(std::istream& in) {
  const PnmHeader h = read_pnm_header(in);
  if (h.magic != "P6") throw FormatError("expected P6, got " + h.magic);
  if (h.maxval != 255) throw FormatError("unsupported P6 maxval " + std::to_string(h.maxval));
  return read_raster(in, h, 3);
}

void write_pgm(std::ostream& out, const nn::Tensor& map, unsigned maxval) {
  if (maxval == 0 || maxval > 255) throw RangeError("PGM maxval must be in [1,255]");
  if (!(map.rank() == 2 || (map.rank() == 3 && map.dim(2) == 1))) {
    throw DimensionError("PGM needs a single-channel map, got " + nn::shape_string(map.shape()));
  }
  out << "P5\n" << map.dim(1) << ' ' << map.dim(0) << '\n' << maxval << '\n';
  std::vector<unsigned char> buf(map.size());
  for (std::size_t k = 0; k < map.size(); ++k) buf[k] = to_byte(map[k], maxval);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

nn::Tensor read_pgm(std::istream& in) {
  const PnmHeader h = read_pnm_header(in);
  if (h.magic != "P5") throw FormatError("expected P5, got " + h.magic);
  return read_raster(in, h, 1);
}

void save_ppm(const fs::path& path, const Image& img) {
  write_file_atomic(path, [&](std::ostream& out) { write_ppm(out, img); });
}

Image load_ppm(const fs::path& path) {
  std::ifstream in = open_input(path);
  return read_ppm(in);
}

void save_pgm(const fs::path& path, const nn::Tensor& map, unsigned maxval) {
  write_file_atomic(path, [&](std::ostream& out) { write_pgm(out, map, maxval); });
}

nn::Tensor load_pgm(const fs::path& path) {
  std::ifstream in = open_input(path);
  return read_pgm(in);
}

// ---- weights ----

namespace {

constexpr std::uint8_t kDtypeF64 = 1;

void put_tensor(std::ostream& out, const nn::Tensor& t) {
  out.put(static_cast<char>(kDtypeF64));
  out.put(static_cast<char>(t.rank()));
  for (std::size_t d : t.shape()) binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (double v : t.values()) binio::put_f64(out, v);
}

std::uint8_t get_byte(std::istream& in, const char* what) {
  return binio::get_uint<std::uint8_t>(in, what);
}

nn::Tensor get_tensor(std::istream& in) {
  if (get_byte(in, "tensor header") != kDtypeF64) throw FormatError("unknown tensor dtype tag");
  const std::size_t rank = get_byte(in, "tensor header");
  if (rank == 0 || rank > 4) throw FormatError("tensor rank " + std::to_string(rank) + " out of range");
  nn::Shape shape(rank);
  std::size_t count = 1;
  for (std::size_t& d : shape) {
    d = binio::get_uint<std::uint32_t>(in, "tensor dims");
    if (d == 0) throw FormatError("tensor has a zero extent");
    count *= d;
    if (count > (std::size_t{1} << 32)) throw FormatError("tensor too large");
  }
  std::vector<double> values(count);
  for (double& v : values) v = binio::get_f64(in, "tensor payload");
  return nn::Tensor(std::move(shape), std::move(values));
}

std::vector<std::string> split_name(const std::string& name) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = name.find(':', start);
    parts.push_back(name.substr(start, colon - start));
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  return parts;
}

std::size_t parse_count(const std::string& s) {
  const long long v = csv::parse_int(s, 0);
  if (v <= 0) throw FormatError("layer parameter must be positive: " + s);
  return static_cast<std::size_t>(v);
}

std::unique_ptr<nn::Layer> build_layer(const std::string& name, std::vector<nn::Tensor> params) {
  const std::vector<std::string> p = split_name(name);
  const std::string& head = p[0];
  auto want = [&](std::size_t fields, std::size_t tensors) {
    if (p.size() != fields) throw FormatError("malformed layer name '" + name + "'");
    if (params.size() != tensors) throw FormatError("layer '" + name + "' has wrong tensor count");
  };
  if (head == "conv2d" || head == "conv2d+relu") {
    want(3, 2);
    const std::size_t filters = parse_count(p[1]);
    const std::size_t x = p[2].find('x');
    if (x == std::string::npos) throw FormatError("malformed kernel in '" + name + "'");
    const std::size_t kr = parse_count(p[2].substr(0, x)), kc = parse_count(p[2].substr(x + 1));
    const nn::Tensor& w = params[0];
    if (w.rank() != 4 || w.dim(0) != kr || w.dim(1) != kc || w.dim(3) != filters) {
      throw FormatError("conv weight " + nn::shape_string(w.shape()) + " disagrees with '" + name + "'");
    }
    return std::make_unique<nn::Conv2D>(std::move(params[0]), std::move(params[1]), head == "conv2d+relu");
  }
  if (head == "dense" || head == "dense+relu") {
    want(2, 2);
    const std::size_t units = parse_count(p[1]);
    if (params[0].rank() != 2 || params[0].dim(1) != units) {
      throw FormatError("dense weight " + nn::shape_string(params[0].shape()) + " disagrees with '" + name + "'");
    }
    return std::make_unique<nn::Dense>(std::move(params[0]), std::move(params[1]), head == "dense+relu");
  }
  if (head == "maxpool") {
    want(2, 0);
    return std::make_unique<nn::MaxPool2D>(parse_count(p[1]));
  }
  if (head == "dropout") {
    want(2, 0);
    return std::make_unique<nn::Dropout>(csv::parse_double(p[1], 0));
  }
  if (head == "flatten") {
    want(1, 0);
    return std::make_unique<nn::Flatten>();
  }
  if (head == "softmax") {
    want(1, 0);
    return std::make_unique<nn::Softmax>();
  }
  throw FormatError("unknown layer record '" + name + "'");
}

}  // namespace

std::string layer_name(const nn::Layer& layer) {
  const nn::LayerSpec s = layer.spec();
  switch (s.kind) {
    case nn::LayerKind::Conv2D:
      return std::string(s.relu ? "conv2d+relu" : "conv2d") + ":" + std::to_string(s.units) + ":" +
             std::to_string(s.kernel_rows) + "x" + std::to_string(s.kernel_cols);
    case nn::LayerKind::Dense:
      return std::string(s.relu ? "dense+relu" : "dense") + ":" + std::to_string(s.units);
    case nn::LayerKind::MaxPool2D:
      return "maxpool:" + std::to_string(s.pool);
    case nn::LayerKind::Dropout:
      return "dropout:" + csv::format_double(s.rate);
    case nn::LayerKind::Flatten:
      return "flatten";
    case nn::LayerKind::Softmax:
      return "softmax";
  }
  throw StateError("unknown layer kind");
}

void write_weights(std::ostream& out, const nn::Network& net) {
  out.write("BSW1", 4);
  binio::put_uint<std::uint16_t>(out, kWeightsVersion);
  out.put(static_cast<char>(net.topology() == nn::Topology::Fcn ? 1 : 0));
  binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_count()));
  out.put(static_cast<char>(net.input_shape().size()));
  for (std::size_t d : net.input_shape()) binio::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const nn::Layer& l = net.layer(i);
    const std::string name = layer_name(l);
    binio::put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const std::vector<const nn::Tensor*> params = l.parameters();
    out.put(static_cast<char>(params.size()));
    for (const nn::Tensor* t : params) put_tensor(out, *t);
  }
  if (!out) throw FormatError("failed writing weights");
}

nn::Network read_weights(std::istream& in) {
  binio::expect_magic(in, "BSW1");
  const auto version = binio::get_uint<std::uint16_t>(in, "weights header");
  if (version != kWeightsVersion) {
    throw VersionError("weights version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kWeightsVersion) + ")");
  }
  const std::uint8_t topo = get_byte(in, "weights header");
  if (topo > 1) throw FormatError("unknown topology flag " + std::to_string(topo));
  const std::uint32_t count = binio::get_uint<std::uint32_t>(in, "weights header");
  if (count == 0 || count > 1024) throw FormatError("implausible layer count " + std::to_string(count));
  const std::size_t rank = get_byte(in, "input shape");
  if (rank == 0 || rank > 4) throw FormatError("input rank out of range");
  nn::Shape input(rank);
  for (std::size_t& d : input) d = binio::get_uint<std::uint32_t>(in, "input shape");

  std::vector<std::unique_ptr<nn::Layer>> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = binio::get_uint<std::uint16_t>(in, "layer name");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw TruncationError("file ends inside a layer name");
    const std::size_t n = get_byte(in, "layer tensor count");
    if (n > 2) throw FormatError("layer '" + name + "' declares " + std::to_string(n) + " tensors");
    std::vector<nn::Tensor> params;
    for (std::size_t k = 0; k < n; ++k) params.push_back(get_tensor(in));
    try {
      layers.push_back(build_layer(name, std::move(params)));
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError("layer '" + name + "': " + e.what());
    }
  }
  try {
    return nn::Network(std::move(input), std::move(layers), topo == 1 ? nn::Topology::Fcn : nn::Topology::Cnn);
  } catch (const Error& e) {
    throw FormatError(std::string("weights describe an inconsistent network: ") + e.what());
  }
}

void save_weights(const fs::path& path, const nn::Network& net) {
  write_file_atomic(path, [&](std::ostream& out) { write_weights(out, net); });
}

nn::Network load_weights(const fs::path& path) {
  std::ifstream in = open_input(path);
  return read_weights(in);
}

}  // namespace beamsel
