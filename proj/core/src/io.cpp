// SPDX-License-Identifier: Apache-2.0
#include "inrrom/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "inrrom/errors.hpp"
#include "json.hpp"

namespace inrrom {

using nlohmann::json;

namespace {

// --- strict JSON reading ----------------------------------------------------

void check_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key \"" + k + "\"");
  }
}

template <class T>
void opt(const json& j, const char* key, T& out, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

// --- config <-> JSON --------------------------------------------------------

json grid_json(const GridSpec& g) {
  return {{"nx", g.nx}, {"ny", g.ny}, {"xmin", g.xmin}, {"xmax", g.xmax}, {"ymin", g.ymin}, {"ymax", g.ymax}};
}

GridSpec grid_from(const json& j, const std::string& where) {
  check_keys(j, {"nx", "ny", "xmin", "xmax", "ymin", "ymax"}, where);
  GridSpec g;
  opt(j, "nx", g.nx, where);
  opt(j, "ny", g.ny, where);
  opt(j, "xmin", g.xmin, where);
  opt(j, "xmax", g.xmax, where);
  opt(j, "ymin", g.ymin, where);
  opt(j, "ymax", g.ymax, where);
  return g;
}

json fom_json(const FomConfig& c) {
  return {{"grid", grid_json(c.grid)},         {"dt", c.dt},
          {"t_final", c.t_final},              {"reynolds", c.reynolds},
          {"snapshot_stride", c.snapshot_stride}, {"newton_tol", c.newton_tol},
          {"newton_max_iters", c.newton_max_iters}};
}

FomConfig fom_from(const json& j, const std::string& where) {
  check_keys(j, {"grid", "dt", "t_final", "reynolds", "snapshot_stride", "newton_tol", "newton_max_iters"}, where);
  FomConfig c;
  if (j.contains("grid")) c.grid = grid_from(j["grid"], where + ".grid");
  opt(j, "dt", c.dt, where);
  opt(j, "t_final", c.t_final, where);
  opt(j, "reynolds", c.reynolds, where);
  opt(j, "snapshot_stride", c.snapshot_stride, where);
  opt(j, "newton_tol", c.newton_tol, where);
  opt(j, "newton_max_iters", c.newton_max_iters, where);
  return c;
}

json model_json(const ModelConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"latent_per_component", c.latent_per_component},
          {"components", c.components},
          {"ode_hidden_layers", c.ode_hidden_layers},
          {"ode_width", c.ode_width},
          {"rank", c.rank},
          {"hyper_hidden_layers", c.hyper_hidden_layers},
          {"hyper_width", c.hyper_width},
          {"substeps", c.substeps},
          {"decoder_depth", c.decoder_depth},
          {"decoder_width", c.decoder_width},
          {"omega_max", c.omega_max},
          {"per_mu_latent", c.per_mu_latent}};
}

ModelConfig model_from(const json& j, const std::string& where) {
  check_keys(j,
             {"kind", "latent_per_component", "components", "ode_hidden_layers", "ode_width", "rank",
              "hyper_hidden_layers", "hyper_width", "substeps", "decoder_depth", "decoder_width", "omega_max",
              "per_mu_latent"},
             where);
  ModelConfig c;
  if (j.contains("kind")) {
    std::string kind;
    opt(j, "kind", kind, where);
    try {
      c.kind = parse_model_kind(kind);
    } catch (const std::exception& e) {
      throw ConfigError(where + ".kind: " + e.what());
    }
  }
  opt(j, "latent_per_component", c.latent_per_component, where);
  opt(j, "components", c.components, where);
  opt(j, "ode_hidden_layers", c.ode_hidden_layers, where);
  opt(j, "ode_width", c.ode_width, where);
  opt(j, "rank", c.rank, where);
  opt(j, "hyper_hidden_layers", c.hyper_hidden_layers, where);
  opt(j, "hyper_width", c.hyper_width, where);
  opt(j, "substeps", c.substeps, where);
  opt(j, "decoder_depth", c.decoder_depth, where);
  opt(j, "decoder_width", c.decoder_width, where);
  opt(j, "omega_max", c.omega_max, where);
  opt(j, "per_mu_latent", c.per_mu_latent, where);
  return c;
}

json weights_json(const LossWeights& w) {
  return {{"data", w.data}, {"residual", w.residual}, {"ic", w.ic},
          {"bc", w.bc},     {"rho_u", w.rho_u},       {"rho_v", w.rho_v}};
}

LossWeights weights_from(const json& j, const std::string& where) {
  check_keys(j, {"data", "residual", "ic", "bc", "rho_u", "rho_v"}, where);
  LossWeights w;
  opt(j, "data", w.data, where);
  opt(j, "residual", w.residual, where);
  opt(j, "ic", w.ic, where);
  opt(j, "bc", w.bc, where);
  opt(j, "rho_u", w.rho_u, where);
  opt(j, "rho_v", w.rho_v, where);
  return w;
}

json train_json(const TrainConfig& c) {
  return {{"physics_informed", c.physics_informed},
          {"epochs", c.epochs},
          {"lr_decoder", c.lr_decoder},
          {"lr_other", c.lr_other},
          {"lr_final_factor", c.lr_final_factor},
          {"weights", weights_json(c.weights)},
          {"seed", c.seed},
          {"residual_fraction", c.residual_fraction},
          {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig train_from(const json& j, const std::string& where) {
  check_keys(j,
             {"physics_informed", "epochs", "lr_decoder", "lr_other", "lr_final_factor", "weights", "seed", "residual_fraction",
              "checkpoint_every"},
             where);
  TrainConfig c;
  opt(j, "physics_informed", c.physics_informed, where);
  opt(j, "epochs", c.epochs, where);
  opt(j, "lr_decoder", c.lr_decoder, where);
  opt(j, "lr_other", c.lr_other, where);
  opt(j, "lr_final_factor", c.lr_final_factor, where);
  if (j.contains("weights")) c.weights = weights_from(j["weights"], where + ".weights");
  opt(j, "seed", c.seed, where);
  opt(j, "residual_fraction", c.residual_fraction, where);
  opt(j, "checkpoint_every", c.checkpoint_every, where);
  return c;
}

json finetune_json(const FineTuneOptions& o) {
  return {{"steps", o.steps},
          {"weights", {{"residual", o.weights.residual}, {"ic", o.weights.ic}, {"bc", o.weights.bc}}},
          {"lr_decoder", o.lr_decoder},
          {"lr_hyper", o.lr_hyper},
          {"residual_fraction", o.residual_fraction},
          {"seed", o.seed}};
}

FineTuneOptions finetune_from(const json& j, const std::string& where) {
  check_keys(j, {"steps", "weights", "lr_decoder", "lr_hyper", "residual_fraction", "seed"}, where);
  FineTuneOptions o;
  opt(j, "steps", o.steps, where);
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    check_keys(w, {"residual", "ic", "bc"}, where + ".weights");
    opt(w, "residual", o.weights.residual, where + ".weights");
    opt(w, "ic", o.weights.ic, where + ".weights");
    opt(w, "bc", o.weights.bc, where + ".weights");
  }
  opt(j, "lr_decoder", o.lr_decoder, where);
  opt(j, "lr_hyper", o.lr_hyper, where);
  opt(j, "residual_fraction", o.residual_fraction, where);
  opt(j, "seed", o.seed, where);
  return o;
}

// --- little-endian byte streams ---------------------------------------------

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(std::uint8_t(v >> (8 * i)));
  }
  void f64(double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) bytes.push_back(std::uint8_t(v >> (8 * i)));
  }
  void f64s(std::span<const double> ds) {
    bytes.reserve(bytes.size() + 8 * ds.size());
    for (double d : ds) f64(d);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> b, std::string what) : bytes_(b), what_(std::move(what)) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError(what_ + ": truncated input");
  }
  std::span<const std::uint8_t> raw(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    const auto s = raw(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(s[i]) << (8 * i);
    return v;
  }
  double f64() {
    const auto s = raw(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(s[i]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  void f64s(double* out, std::size_t n) {
    need(8 * n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f64();
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string what_;
};

void put_header(Writer& w, const char (&magic)[8], const json& header) {
  const std::string text = header.dump();
  if (text.size() > 0xffffffffu) throw IoError("header too large");
  w.raw(magic, 8);
  w.u32(std::uint32_t(text.size()));
  w.raw(text.data(), text.size());
}

json get_header(Reader& r, const char (&magic)[8], const std::string& what) {
  const auto m = r.raw(8);
  if (!std::equal(m.begin(), m.end(), reinterpret_cast<const std::uint8_t*>(magic))) {
    throw IoError(what + ": bad magic bytes");
  }
  const std::uint32_t len = r.u32();
  const auto text = r.raw(len);
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw IoError(what + ": malformed header: " + e.what());
  }
}

template <class T>
T field(const json& j, const char* key, const std::string& what) {
  const auto it = j.find(key);
  if (it == j.end()) throw IoError(what + ": header lacks \"" + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw IoError(what + ": bad \"" + key + "\": " + e.what());
  }
}

}  // namespace

// --- RunConfig ----------------------------------------------------------------

void RunConfig::validate() const {
  if (name.empty()) throw ConfigError("name must not be empty");
  fom.validate();
  if (train_params.empty()) throw ConfigError("train_params must not be empty");
  for (double mu : train_params) {
    if (!(mu > 0.0)) throw ConfigError("train_params must be positive");
  }
  for (double mu : test_params) {
    if (!(mu > 0.0)) throw ConfigError("test_params must be positive");
  }
  model.validate();
  train.validate();
  finetune.validate();
}

RunConfig parse_run_config(const std::string& json_text) {
  const json j = parse_json(json_text, "config");
  check_keys(j,
             {"name", "dataset", "output_dir", "fom", "train_params", "test_params", "model", "train", "finetune",
              "export"},
             "config");
  RunConfig c;
  opt(j, "name", c.name, "config");
  opt(j, "dataset", c.dataset, "config");
  opt(j, "output_dir", c.output_dir, "config");
  if (j.contains("fom")) c.fom = fom_from(j["fom"], "config.fom");
  opt(j, "train_params", c.train_params, "config");
  opt(j, "test_params", c.test_params, "config");
  if (j.contains("model")) c.model = model_from(j["model"], "config.model");
  if (j.contains("train")) c.train = train_from(j["train"], "config.train");
  if (j.contains("finetune")) c.finetune = finetune_from(j["finetune"], "config.finetune");
  if (j.contains("export")) {
    const auto& e = j["export"];
    check_keys(e, {"snapshots", "error_maps"}, "config.export");
    opt(e, "snapshots", c.export_options.snapshots, "config.export");
    opt(e, "error_maps", c.export_options.error_maps, "config.export");
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_run_config(std::string(bytes.begin(), bytes.end()));
}

std::string to_json(const RunConfig& c, int indent) {
  const json j = {{"name", c.name},
                  {"dataset", c.dataset},
                  {"output_dir", c.output_dir},
                  {"fom", fom_json(c.fom)},
                  {"train_params", c.train_params},
                  {"test_params", c.test_params},
                  {"model", model_json(c.model)},
                  {"train", train_json(c.train)},
                  {"finetune", finetune_json(c.finetune)},
                  {"export",
                   {{"snapshots", c.export_options.snapshots}, {"error_maps", c.export_options.error_maps}}}};
  return j.dump(indent);
}

std::string to_json(const FomConfig& c) { return fom_json(c).dump(); }
std::string to_json(const ModelConfig& c) { return model_json(c).dump(); }
std::string to_json(const TrainConfig& c) { return train_json(c).dump(); }
FomConfig parse_fom_config(const std::string& t) { return fom_from(parse_json(t, "fom"), "fom"); }
ModelConfig parse_model_config(const std::string& t) { return model_from(parse_json(t, "model"), "model"); }
TrainConfig parse_train_config(const std::string& t) { return train_from(parse_json(t, "train"), "train"); }

// --- dataset ------------------------------------------------------------------

std::vector<std::uint8_t> encode_dataset(const Dataset& d) {
  d.validate();
  json header = {{"grid", grid_json(d.grid)},
                 {"times", d.times},
                 {"params", d.params},
                 {"components", d.components},
                 {"fom_wall_seconds", d.fom_wall_seconds},
                 {"config", d.config_json.empty() ? json::object() : parse_json(d.config_json, "dataset config")}};
  Writer w;
  put_header(w, kDatasetMagic, header);
  w.f64s(d.states);
  return std::move(w.bytes);
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  const std::string what = "dataset";
  Reader r(bytes, what);
  const json h = get_header(r, kDatasetMagic, what);
  Dataset d;
  try {
    d.grid = grid_from(field<json>(h, "grid", what), "dataset.grid");
  } catch (const ConfigError& e) {
    throw IoError(e.what());
  }
  d.times = field<std::vector<double>>(h, "times", what);
  d.params = field<std::vector<double>>(h, "params", what);
  d.components = field<std::vector<std::string>>(h, "components", what);
  d.fom_wall_seconds = field<std::vector<double>>(h, "fom_wall_seconds", what);
  if (h.contains("config")) d.config_json = h["config"].dump();
  const std::size_t count = d.params.size() * d.trajectory_size();
  if (r.remaining() != 8 * count) {
    throw IoError(what + ": payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                  std::to_string(8 * count));
  }
  d.states.resize(count);
  r.f64s(d.states.data(), count);
  try {
    d.validate();
  } catch (const std::exception& e) {
    throw IoError(what + ": " + e.what());
  }
  return d;
}

void write_dataset(const Dataset& d, const std::filesystem::path& path) { write_file(path, encode_dataset(d)); }

Dataset read_dataset(const std::filesystem::path& path) {
  try {
    return decode_dataset(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// --- checkpoint -----------------------------------------------------------------

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c_in) {
  Checkpoint& c = const_cast<Checkpoint&>(c_in);  // parameters() hands out mutable pointers only
  const std::vector<Parameter*> params = c.model.parameters();
  if (c.adam.m.size() != params.size() || c.adam.v.size() != params.size()) {
    throw ContractError("checkpoint: optimizer state does not match the parameter list");
  }
  json plist = json::array();
  std::set<std::string> seen;
  std::size_t offset = 0;
  for (const auto* p : params) {
    if (!seen.insert(p->name).second) throw ContractError("checkpoint: duplicate parameter name " + p->name);
    plist.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"offset", offset}});
    offset += p->size();
  }
  const std::size_t n = offset;
  const json manifest = {
      {"model_config", model_json(c.model_config)},
      {"train_config", train_json(c.train_config)},
      {"train_params", c.train_params},
      {"mu_encoding", {{"center", c.model.mu_encoding().center}, {"scale", c.model.mu_encoding().scale}}},
      {"seed", c.train_config.seed},
      {"epoch", c.epoch},
      {"finetuned_mu", c.finetuned_mu},
      {"finetune_steps", c.finetune_steps},
      {"parameters", plist},
      {"parameter_values", n},
      {"adam",
       {{"step", c.adam.step},
        {"beta1", c.adam.beta1},
        {"beta2", c.adam.beta2},
        {"eps", c.adam.eps},
        {"first_moment_offset", n},
        {"second_moment_offset", 2 * n}}},
  };
  Writer w;
  put_header(w, kCheckpointMagic, manifest);
  for (const auto* p : params) w.f64s(p->value.values());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (c.adam.m[i].shape() != params[i]->value.shape() || c.adam.v[i].shape() != params[i]->value.shape()) {
      throw ContractError("checkpoint: moment shape mismatch for " + params[i]->name);
    }
    w.f64s(c.adam.m[i].values());
  }
  for (const auto& v : c.adam.v) w.f64s(v.values());
  return std::move(w.bytes);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  const std::string what = "checkpoint";
  Reader r(bytes, what);
  const json h = get_header(r, kCheckpointMagic, what);
  Checkpoint c;
  try {
    c.model_config = model_from(field<json>(h, "model_config", what), "model_config");
    c.train_config = train_from(field<json>(h, "train_config", what), "train_config");
  } catch (const ConfigError& e) {
    throw IoError(what + ": " + e.what());
  }
  c.train_params = field<std::vector<double>>(h, "train_params", what);
  const json mu = field<json>(h, "mu_encoding", what);
  MuEncoding enc{field<double>(mu, "center", what), field<double>(mu, "scale", what)};
  c.train_config.seed = field<std::uint64_t>(h, "seed", what);
  c.epoch = field<std::size_t>(h, "epoch", what);
  c.finetuned_mu = field<double>(h, "finetuned_mu", what);
  c.finetune_steps = field<std::size_t>(h, "finetune_steps", what);
  try {
    c.model = RomModel(c.model_config, c.train_config.seed, enc, c.train_params);
  } catch (const std::exception& e) {
    throw IoError(what + ": cannot rebuild model: " + e.what());
  }

  const std::vector<Parameter*> params = c.model.parameters();
  const json plist = field<json>(h, "parameters", what);
  if (!plist.is_array() || plist.size() != params.size()) {
    throw IoError(what + ": manifest lists " + std::to_string(plist.size()) + " parameters, model has " +
                  std::to_string(params.size()));
  }
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto name = field<std::string>(plist[i], "name", what);
    const auto shape = field<Shape>(plist[i], "shape", what);
    const auto off = field<std::size_t>(plist[i], "offset", what);
    if (name != params[i]->name) throw IoError(what + ": expected parameter " + params[i]->name + ", found " + name);
    if (shape != params[i]->value.shape()) throw IoError(what + ": shape mismatch for " + name);
    if (off != offset) throw IoError(what + ": offsets of " + name + " leave a gap or overlap");
    offset += params[i]->size();
  }
  const std::size_t n = offset;
  if (field<std::size_t>(h, "parameter_values", what) != n) throw IoError(what + ": parameter count mismatch");
  const json adam = field<json>(h, "adam", what);
  if (field<std::size_t>(adam, "first_moment_offset", what) != n ||
      field<std::size_t>(adam, "second_moment_offset", what) != 2 * n) {
    throw IoError(what + ": optimizer offsets do not follow the parameters");
  }
  if (r.remaining() != 8 * 3 * n) {
    throw IoError(what + ": payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                  std::to_string(24 * n));
  }
  for (auto* p : params) r.f64s(p->value.data(), p->size());
  c.adam = AdamState::zeros_like(params);
  c.adam.step = field<std::size_t>(adam, "step", what);
  c.adam.beta1 = field<double>(adam, "beta1", what);
  c.adam.beta2 = field<double>(adam, "beta2", what);
  c.adam.eps = field<double>(adam, "eps", what);
  for (auto& m : c.adam.m) r.f64s(m.data(), m.size());
  for (auto& v : c.adam.v) r.f64s(v.data(), v.size());
  return c;
}

void write_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(c));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string checkpoint_manifest(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "checkpoint");
  return get_header(r, kCheckpointMagic, "checkpoint").dump(2);
}

// --- files ------------------------------------------------------------------------

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::vector<std::uint8_t> out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path.string() + ": read failed");
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError(path.string() + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string metrics_csv(const Metrics& m, const std::string& source) {
  std::ostringstream out;
  char buf[256];
  out << "# source: " << source << "\n";
  out << "mu,relative_error,fom_seconds,rom_seconds,speedup\n";
  double fom_sum = 0.0, rom_sum = 0.0, sp_sum = 0.0, fom_max = 0.0, rom_max = 0.0;
  for (const auto& p : m.per_param) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.9g,%.9g,%.9g\n", p.mu, p.relative_error, p.fom_seconds,
                  p.rom_seconds, p.speedup);
    out << buf;
    fom_sum += p.fom_seconds;
    rom_sum += p.rom_seconds;
    sp_sum += p.speedup;
    fom_max = std::max(fom_max, p.fom_seconds);
    rom_max = std::max(rom_max, p.rom_seconds);
  }
  const double n = double(m.per_param.size());
  std::snprintf(buf, sizeof buf, "avg,%.17g,%.9g,%.9g,%.9g\n", m.avg_error, fom_sum / n, rom_sum / n, sp_sum / n);
  out << buf;
  std::snprintf(buf, sizeof buf, "max,%.17g,%.9g,%.9g,%.9g\n", m.max_error, fom_max, rom_max, m.max_speedup);
  out << buf;
  return out.str();
}

}  // namespace inrrom
