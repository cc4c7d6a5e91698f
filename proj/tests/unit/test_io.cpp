// SPDX-License-Identifier: Apache-2.0
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "inrrom/errors.hpp"
#include "inrrom/io.hpp"
#include "json.hpp"

using namespace inrrom;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / ("inrrom_io_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

const Dataset& small_dataset() {
  static const Dataset d = [] {
    FomConfig f;
    f.grid.nx = 6;
    f.grid.ny = 5;
    f.dt = 0.05;
    f.t_final = 0.2;
    f.snapshot_stride = 2;
    Dataset out = generate_dataset(f, {30.0, 700.0}, 1);
    out.config_json = to_json(f);
    return out;
  }();
  return d;
}

ModelConfig small_model(ModelKind kind) {
  ModelConfig m;
  m.kind = kind;
  m.latent_per_component = 3;
  m.ode_hidden_layers = 2;
  m.ode_width = 6;
  m.rank = 2;
  m.hyper_width = 4;
  m.decoder_depth = 2;
  m.decoder_width = 5;
  return m;
}

Checkpoint trained(ModelKind kind) {
  TrainConfig t;
  t.epochs = 3;
  t.physics_informed = true;
  return train(small_dataset(), small_model(kind), t).checkpoint;
}

std::uint32_t read_u32_le(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

double read_f64_le(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = bits << 8 | p[i];
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("dataset container layout") {
    const Dataset& d = small_dataset();
    const auto bytes = encode_dataset(d);
    REQUIRE(bytes.size() > 12);
    CHECK(std::memcmp(bytes.data(), kDatasetMagic, 8) == 0);
    const std::uint32_t hlen = read_u32_le(bytes.data() + 8);
    const std::size_t payload = 12 + hlen;
    CHECK(bytes.size() - payload == 8 * 2 * 3 * 2 * 5 * 6);
    const auto header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + long(payload));
    CHECK(header.at("params") == nlohmann::json({30.0, 700.0}));
    CHECK(header.at("components") == nlohmann::json({"w", "z"}));
    CHECK(header.contains("config"));
    // Values are little-endian doubles in [param][snap][comp][row][col] order.
    CHECK(read_f64_le(bytes.data() + payload) == d.states[0]);
    const std::size_t k = d.trajectory_size() + 37;
    CHECK(read_f64_le(bytes.data() + payload + 8 * k) == d.states[k]);
  }

  TEST_CASE("dataset round trip") {
    const Dataset& d = small_dataset();
    const fs::path p = temp_dir() / "d.bin";
    write_dataset(d, p);
    const Dataset back = read_dataset(p);
    CHECK(back.states == d.states);
    CHECK(back.times == d.times);
    CHECK(back.params == d.params);
    CHECK(back.grid == d.grid);
    CHECK(back.fom_wall_seconds == d.fom_wall_seconds);
    CHECK(back.config_json == d.config_json);
    CHECK(encode_dataset(back) == read_file(p));
  }

  TEST_CASE("corrupt datasets are rejected") {
    auto bytes = encode_dataset(small_dataset());
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_dataset(bad), IoError);
    auto cut = bytes;
    cut.resize(cut.size() - 8);
    CHECK_THROWS_AS(decode_dataset(cut), IoError);
    CHECK_THROWS_AS(decode_dataset(std::span<const std::uint8_t>(bytes.data(), 10)), IoError);
    CHECK_THROWS_AS(read_dataset(temp_dir() / "missing.bin"), IoError);
  }

  TEST_CASE("checkpoint round trip for every model kind") {
    for (auto kind : {ModelKind::NODE, ModelKind::PNODE, ModelKind::HyperPNODE}) {
      Checkpoint c = trained(kind);
      const fs::path p = temp_dir() / ("c_" + to_string(kind) + ".bin");
      write_checkpoint(c, p);
      Checkpoint back = read_checkpoint(p);
      CHECK(encode_checkpoint(back) == read_file(p));
      CHECK(back.epoch == 3);
      CHECK(back.adam.step == c.adam.step);
      CHECK(back.model.mu_encoding().center == c.model.mu_encoding().center);
      // The reloaded model predicts bit-identically.
      CHECK(back.model.predict(700.0, small_dataset().times, small_dataset().grid) ==
            c.model.predict(700.0, small_dataset().times, small_dataset().grid));
      const Metrics a = evaluate(c, small_dataset(), {30.0, 700.0});
      const Metrics b = evaluate(back, small_dataset(), {30.0, 700.0});
      CHECK(a.avg_error == b.avg_error);
      CHECK(a.max_error == b.max_error);
    }
  }

  TEST_CASE("checkpoint manifest tiles the payload") {
    const Checkpoint c = trained(ModelKind::HyperPNODE);
    const auto bytes = encode_checkpoint(c);
    CHECK(std::memcmp(bytes.data(), kCheckpointMagic, 8) == 0);
    const auto manifest = nlohmann::json::parse(checkpoint_manifest(bytes));
    std::size_t offset = 0;
    std::set<std::string> names;
    for (const auto& p : manifest.at("parameters")) {
      CHECK(p.at("offset").get<std::size_t>() == offset);
      std::size_t n = 1;
      for (auto e : p.at("shape")) n *= e.get<std::size_t>();
      offset += n;
      CHECK(names.insert(p.at("name").get<std::string>()).second);
    }
    CHECK(manifest.at("parameter_values").get<std::size_t>() == offset);
    CHECK(manifest.at("adam").at("second_moment_offset").get<std::size_t>() == 2 * offset);
    for (const char* key : {"model_config", "train_config", "mu_encoding", "seed", "epoch", "train_params"}) {
      CHECK_MESSAGE(manifest.contains(key), key);
    }
    const std::uint32_t hlen = read_u32_le(bytes.data() + 8);
    CHECK(bytes.size() == 12 + hlen + 8 * 3 * offset);

    auto bad = bytes;
    bad[3] = 0;
    CHECK_THROWS_AS(decode_checkpoint(bad), IoError);
    auto cut = bytes;
    cut.pop_back();
    CHECK_THROWS_AS(decode_checkpoint(cut), IoError);
  }

  TEST_CASE("run configuration") {
    const RunConfig defaults = parse_run_config("{}");
    CHECK(defaults.train_params.size() == 10);
    CHECK(defaults.test_params.size() == 4);
    CHECK(defaults.fom.grid.nx == 64);
    CHECK(defaults.fom.dt == 1e-3);
    CHECK(defaults.model.latent_per_component == 50);
    CHECK(defaults.train.lr_decoder == 0.01);

    const RunConfig c = parse_run_config(R"({"name": "x", "fom": {"grid": {"nx": 16}, "reynolds": 5},
      "model": {"kind": "HyperPNODE", "rank": 7}, "train": {"epochs": 12, "weights": {"bc": 0.5}},
      "finetune": {"steps": 9}, "export": {"snapshots": [0, 3]}})");
    CHECK(c.name == "x");
    CHECK(c.fom.grid.nx == 16);
    CHECK(c.fom.grid.ny == 64);
    CHECK(c.model.kind == ModelKind::HyperPNODE);
    CHECK(c.model.rank == 7);
    CHECK(c.train.epochs == 12);
    CHECK(c.train.weights.bc == 0.5);
    CHECK(c.finetune.steps == 9);
    CHECK(c.export_options.snapshots == std::vector<std::size_t>{0, 3});

    const RunConfig again = parse_run_config(to_json(c));
    CHECK(to_json(again) == to_json(c));

    CHECK_THROWS_AS(parse_run_config(R"({"nmae": "typo"})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"fom": {"grid": {"nz": 3}}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"train": {"weights": {"alpha": 1}}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"model": {"kind": "RNN"}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"fom": {"dt": "fast"}})"), ConfigError);
    CHECK_THROWS_AS(load_run_config(temp_dir() / "nope.json"), IoError);
  }

  TEST_CASE("metrics csv") {
    Metrics m;
    m.per_param = {{30.0, 0.1, 2.0, 0.01, 200.0}, {100.0, 0.3, 4.0, 0.02, 200.0}};
    m.avg_error = 0.2;
    m.max_error = 0.3;
    m.min_speedup = m.max_speedup = 200.0;
    const std::string csv = metrics_csv(m, "ckpt.bin");
    std::istringstream in(csv);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "# source: ckpt.bin");
    CHECK(lines[1] == "mu,relative_error,fom_seconds,rom_seconds,speedup");
    CHECK(lines[2].rfind("30,0.10000000000000001,", 0) == 0);
    CHECK(lines[3].rfind("100,0.29999999999999999,", 0) == 0);
    CHECK(lines[4].rfind("avg,0.20000000000000001,3,", 0) == 0);
    CHECK(lines[5].rfind("max,0.29999999999999999,", 0) == 0);
  }

  TEST_CASE("heatmaps") {
    const fs::path p = temp_dir() / "h.ppm";
    std::vector<double> field(4 * 3);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-2.0, 5.0);
    for (auto& v : field) v = d(rng);
    const auto info = write_heatmap(field, 4, 3, p, 100.0, 0.5);
    const double lo = *std::min_element(field.begin(), field.end());
    const double hi = *std::max_element(field.begin(), field.end());
    CHECK(info.min == lo);
    CHECK(info.max == hi);
    const auto bytes = read_file(p);
    const std::string head = "P6\n4 3\n255\n";
    REQUIRE(bytes.size() == head.size() + 36);
    CHECK(std::string(bytes.begin(), bytes.begin() + long(head.size())) == head);
    const auto side = nlohmann::json::parse(std::ifstream(p.string() + ".json"));
    CHECK(side.at("min").get<double>() == lo);
    CHECK(side.at("max").get<double>() == hi);
    CHECK(side.at("mu").get<double>() == 100.0);
    CHECK(side.at("t").get<double>() == 0.5);
    // Row 0 of the field is the bottom image row; the minimum maps to colour 0.
    const std::size_t imin = std::size_t(std::min_element(field.begin(), field.end()) - field.begin());
    const std::size_t img_row = 2 - imin / 4, col = imin % 4;
    const auto c0 = colormap(0);
    for (int ch = 0; ch < 3; ++ch) CHECK(bytes[head.size() + 3 * (img_row * 4 + col) + std::size_t(ch)] == c0[std::size_t(ch)]);

    const std::vector<double> flat(6, 1.25);
    write_heatmap(flat, 3, 2, temp_dir() / "flat.ppm", 1.0, 0.0);
    const auto fb = read_file(temp_dir() / "flat.ppm");
    const std::size_t off = fb.size() - 18;
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t ch = 0; ch < 3; ++ch) CHECK(fb[off + 3 * i + ch] == fb[off + ch]);
    }
    CHECK_THROWS_AS(write_heatmap(flat, 4, 2, temp_dir() / "x.ppm", 1.0, 0.0), ContractError);
    CHECK_THROWS_AS(write_heatmap(flat, 3, 2, temp_dir() / "no_such_dir" / "x.ppm", 1.0, 0.0), IoError);
  }

  TEST_CASE("colormap runs dark to bright") {
    const auto a = colormap(0), b = colormap(255);
    CHECK(int(a[0]) + a[1] + a[2] < int(b[0]) + b[1] + b[2]);
  }
}
