#include <fstream>
#include <sstream>

#include "fmvo/errors.hpp"
#include "fmvo/kv_config.hpp"
#include "fmvo/text_format.hpp"
#include "fmvo/vfnet.hpp"

namespace fmvo {

namespace {

constexpr const char* kFormat = "fmvo-vfnet";
constexpr int kVersion = 1;
constexpr int kDigits = 17;

std::vector<std::string> layer_names(const VectorFieldNet& net) {
  std::vector<std::string> names;
  const auto add = [&](const std::vector<DenseLayer>& g, const char* prefix) {
    for (std::size_t i = 0; i < g.size(); ++i) names.push_back(std::string(prefix) + "." + std::to_string(i));
  };
  add(net.state_embed, "state_embed");
  add(net.cond_embed, "cond_embed");
  add(net.trunk, "trunk");
  add(net.head_rot, "head_rot");
  add(net.head_trans, "head_trans");
  return names;
}

const char* activation_name(Activation a) { return a == Activation::kTanh ? "tanh" : "identity"; }

int require_int(const KeyValueConfig& kv, const char* key) {
  const auto v = kv.get_int(key);
  if (!v) throw ParseError(std::string("checkpoint header is missing '") + key + "'");
  return static_cast<int>(*v);
}

}  // namespace

std::string checkpoint_to_string(const VectorFieldNet& net) {
  net.check_shapes();
  const NetConfig& c = net.config;
  std::ostringstream out;
  out << "# fmvo vector field checkpoint\n";
  out << "format=" << kFormat << "\n";
  out << "version=" << kVersion << "\n";
  out << "cond_dim=" << c.cond_dim << "\n";
  out << "time_embed_dim=" << c.time_embed_dim << "\n";
  out << "state_embed_width=" << c.state_embed_width << "\n";
  out << "cond_embed_width=" << c.cond_embed_width << "\n";
  out << "cond_embed_layers=" << c.cond_embed_layers << "\n";
  out << "trunk_width=" << c.trunk_width << "\n";
  out << "trunk_layers=" << c.trunk_layers << "\n";
  out << "head_width=" << c.head_width << "\n";
  out << "head_layers=" << c.head_layers << "\n";
  out << "parameter_count=" << net.parameter_count() << "\n";
  out << "end_header\n";

  const auto names = layer_names(net);
  const auto layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& l = *layers[i];
    out << "layer " << names[i] << " " << l.out() << " " << l.in() << " " << activation_name(l.activation) << "\n";
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = l.weight;
    out << "w " << text::join_doubles(w.data(), static_cast<std::size_t>(w.size()), ' ', kDigits) << "\n";
    out << "b " << text::join_doubles(l.bias.data(), static_cast<std::size_t>(l.bias.size()), ' ', kDigits) << "\n";
  }
  return out.str();
}

VectorFieldNet checkpoint_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::string header;
  bool header_done = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line) == "end_header") {
      header_done = true;
      break;
    }
    header += line;
    header += '\n';
  }
  if (!header_done) throw ParseError("checkpoint has no end_header line");

  const KeyValueConfig kv = KeyValueConfig::parse(header);
  if (kv.get_string("format") != std::string(kFormat)) throw ParseError("not an fmvo checkpoint");
  if (require_int(kv, "version") != kVersion) throw ParseError("unsupported checkpoint version");

  NetConfig c;
  c.cond_dim = require_int(kv, "cond_dim");
  c.time_embed_dim = require_int(kv, "time_embed_dim");
  c.state_embed_width = require_int(kv, "state_embed_width");
  c.cond_embed_width = require_int(kv, "cond_embed_width");
  c.cond_embed_layers = require_int(kv, "cond_embed_layers");
  c.trunk_width = require_int(kv, "trunk_width");
  c.trunk_layers = require_int(kv, "trunk_layers");
  c.head_width = require_int(kv, "head_width");
  c.head_layers = require_int(kv, "head_layers");
  c.validate();

  Rng unused(0);
  VectorFieldNet net = init_params(unused, c);
  const auto names = layer_names(net);
  auto layers = net.layers();

  const auto next_line = [&]() -> std::string {
    while (std::getline(in, line)) {
      ++line_no;
      if (!text::trim(line).empty()) return line;
    }
    throw ParseError("unexpected end of checkpoint", line_no);
  };
  const auto read_values = [&](const char* tag, Eigen::Index count) {
    const std::string l = next_line();
    const auto fields = text::split_whitespace(l);
    if (fields.empty() || fields.front() != tag) throw ParseError(std::string("expected '") + tag + "' row", line_no);
    if (static_cast<Eigen::Index>(fields.size()) - 1 != count) throw ParseError("wrong number of values", line_no);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(count));
    for (std::size_t i = 1; i < fields.size(); ++i) values.push_back(text::parse_double(fields[i], line_no));
    return values;
  };

  for (std::size_t i = 0; i < layers.size(); ++i) {
    DenseLayer& l = *layers[i];
    const std::string head = next_line();
    const auto f = text::split_whitespace(head);
    if (f.size() != 5 || f[0] != "layer") throw ParseError("expected layer record", line_no);
    if (f[1] != names[i]) throw ParseError("expected layer " + names[i] + ", found " + std::string(f[1]), line_no);
    if (static_cast<Eigen::Index>(text::parse_int(f[2], line_no)) != l.out() ||
        static_cast<Eigen::Index>(text::parse_int(f[3], line_no)) != l.in() || f[4] != activation_name(l.activation)) {
      throw ParseError("layer " + names[i] + " shape disagrees with header", line_no);
    }
    const auto w = read_values("w", l.weight.size());
    l.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        w.data(), l.out(), l.in());
    const auto b = read_values("b", l.bias.size());
    l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), l.out());
  }
  if (const auto count = kv.get_uint("parameter_count"); count && *count != net.parameter_count()) {
    throw ParseError("parameter_count disagrees with layer shapes");
  }
  return net;
}

void save_checkpoint(const VectorFieldNet& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_to_string(net);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

VectorFieldNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace fmvo
