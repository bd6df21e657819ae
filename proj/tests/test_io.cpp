#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "beamsel/config.hpp"
#include "beamsel/errors.hpp"
#include "beamsel/fcn.hpp"
#include "beamsel/io.hpp"

using namespace beamsel;
namespace fs = std::filesystem;

namespace {

Image byte_image(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Image img({rows, cols, 3});
  for (double& v : img.values()) v = static_cast<double>(rng.below(256)) / 255.0;
  return img;
}

struct ScopedEnv {
  std::string name;
  ScopedEnv(std::string n, const char* value) : name(std::move(n)) { ::setenv(name.c_str(), value, 1); }
  ~ScopedEnv() { ::unsetenv(name.c_str()); }
};

}  // namespace

TEST_CASE("PPM round trip is lossless and byte-identical") {
  const Image img = byte_image(7, 9, 1);
  std::stringstream s;
  write_ppm(s, img);
  const std::string bytes = s.str();
  CHECK(bytes.rfind("P6\n9 7\n255\n", 0) == 0);
  CHECK(bytes.size() == 11 + 7 * 9 * 3);
  const Image back = read_ppm(s);
  CHECK(back == img);
  std::stringstream again;
  write_ppm(again, back);
  CHECK(again.str() == bytes);
}

TEST_CASE("PPM reader: hand-written fixture and malformed inputs") {
  const std::string px = std::string("P6\n# two by two\n2 2\n255\n") +
                         std::string("\xff\x00\x00\x00\xff\x00\x00\x00\xff\x80\x80\x80", 12);
  std::istringstream in(px);
  const Image img = read_ppm(in);
  REQUIRE(img.shape() == nn::Shape{2, 2, 3});
  CHECK(img.at(0, 0, 0) == 1.0);
  CHECK(img.at(0, 1, 1) == 1.0);
  CHECK(img.at(1, 0, 2) == 1.0);
  CHECK(img.at(1, 1, 0) == doctest::Approx(128.0 / 255.0));

  std::istringstream deep("P6\n2 2\n65535\n");
  CHECK_THROWS_AS(read_ppm(deep), FormatError);
  std::istringstream magic("P3\n2 2\n255\n");
  CHECK_THROWS_AS(read_ppm(magic), FormatError);
  std::istringstream cut(px.substr(0, px.size() - 4));
  CHECK_THROWS_AS(read_ppm(cut), TruncationError);
}

TEST_CASE("PGM round trip with a small maxval") {
  nn::Tensor map({3, 4});
  for (std::size_t k = 0; k < map.size(); ++k) map[k] = static_cast<double>(k % 2);
  std::stringstream s;
  write_pgm(s, map, 1);
  CHECK(s.str().rfind("P5\n4 3\n1\n", 0) == 0);
  const nn::Tensor back = read_pgm(s);
  REQUIRE(back.shape() == nn::Shape{3, 4, 1});
  for (std::size_t k = 0; k < map.size(); ++k) CHECK(back[k] == map[k]);
  CHECK_THROWS(write_pgm(s, map, 0));
}

TEST_CASE("weights round-trip bit-exactly") {
  const nn::Network net = make_stage1(12, 44);
  std::stringstream s;
  write_weights(s, net);
  const nn::Network back = read_weights(s);
  CHECK(back.specs() == net.specs());
  CHECK(back.input_shape() == net.input_shape());
  const auto a = net.parameters(), b = back.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(*a[k] == *b[k]);
  CHECK(layer_name(net.layer(0)) == "conv2d+relu:12:5x5");
  CHECK(layer_name(net.layer(1)) == "dropout:0.25");
  CHECK(layer_name(net.layer(2)) == "maxpool:2");
}

TEST_CASE("weights reader rejects damaged files") {
  std::stringstream s;
  write_weights(s, make_stage1(12, 1));
  const std::string bytes = s.str();

  std::istringstream cut(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(read_weights(cut), TruncationError);
  std::string bad = bytes;
  bad[0] = 'X';
  std::istringstream magic(bad);
  CHECK_THROWS_AS(read_weights(magic), FormatError);
  std::string future = bytes;
  future[4] = static_cast<char>(kWeightsVersion + 1);
  std::istringstream version(future);
  CHECK_THROWS_AS(read_weights(version), VersionError);
}

TEST_CASE("a reloaded FCN file still matches its source CNN") {
  const nn::Network cnn = make_stage1(12, 3);
  const fs::path dir = fs::temp_directory_path() / "beamsel_io_test";
  fs::create_directories(dir);
  save_weights(dir / "fcn.bsw", convert_cnn_to_fcn(cnn));
  const nn::Network fcn = load_weights(dir / "fcn.bsw");
  CHECK(equivalence_check(cnn, fcn, byte_image(40, 50, 2), 50, 1) <= 1e-9);
  CHECK_THROWS_AS(load_weights(dir / "missing.bsw"), MissingInputError);
  fs::remove_all(dir);
}

TEST_CASE("atomic writes leave no temporary behind") {
  const fs::path dir = fs::temp_directory_path() / "beamsel_atomic_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text_atomic(dir / "a.txt", "hello\n");
  CHECK(read_text(dir / "a.txt") == "hello\n");
  write_text_atomic(dir / "a.txt", "again\n");
  CHECK(read_text(dir / "a.txt") == "again\n");
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 1);
  fs::remove_all(dir);
}

TEST_CASE("config parsing") {
  RunConfig c = parse_config("{}");
  CHECK(c == RunConfig{});
  c = parse_config(R"({"seed": 3, "mode": "fcn", "cameras": [1, 2], "obstacle": "cardbox"})");
  CHECK(c.seed == 3);
  CHECK(c.mode == DetectMode::Fcn);
  CHECK(c.cameras == std::vector<int>{1, 2});
  CHECK(c.obstacle == Obstacle::Cardbox);
  CHECK(parse_config(config_to_json(c)) == c);

  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"sed": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"seed": "x"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"cameras": [3]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"stride": 0})"), ConfigError);
}

TEST_CASE("environment overrides") {
  RunConfig c;
  {
    ScopedEnv out("BEAMSEL_OUT", "/tmp/elsewhere");
    ScopedEnv threads("BEAMSEL_THREADS", "3");
    apply_env_overrides(c);
  }
  CHECK(c.out_dir == "/tmp/elsewhere");
  CHECK(c.threads == 3);
  ScopedEnv bad("BEAMSEL_THREADS", "zero");
  CHECK_THROWS_AS(apply_env_overrides(c), ConfigError);
}
