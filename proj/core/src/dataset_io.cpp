#include <fstream>
#include <numbers>
#include <sstream>

#include "fmvo/errors.hpp"
#include "fmvo/synthworld.hpp"
#include "fmvo/text_format.hpp"

namespace fmvo {

std::vector<TrainingPair> FeatureSet::pairs() const {
  std::vector<TrainingPair> out;
  for (const FeatureRow& r : rows) {
    if (r.pair) out.push_back(*r.pair);
  }
  return out;
}

std::vector<ConditionVector> FeatureSet::conditions() const {
  std::vector<ConditionVector> out;
  out.reserve(rows.size());
  for (const FeatureRow& r : rows) out.push_back(r.cond);
  return out;
}

FeatureSet to_feature_set(const DatasetHeader& header, std::span<const TrainingPair> pairs) {
  FeatureSet set;
  set.header = header;
  for (const TrainingPair& p : pairs) {
    if (p.cond.dim() != header.k) throw ConfigError("pair condition dimension disagrees with header k");
    set.rows.push_back({p.cond, p});
  }
  return set;
}

std::string features_to_string(const FeatureSet& set) {
  std::string out;
  out += "#k=" + std::to_string(set.header.k) + "\n";
  out += "#lift_seed=" + std::to_string(set.header.lift_seed) + "\n";
  out += "#ambiguity=" + text::format_double(set.header.ambiguity) + "\n";
  out += "#noise=" + text::format_double(set.header.noise) + "\n";
  for (const FeatureRow& r : set.rows) {
    if (r.cond.dim() != set.header.k) throw ConfigError("row condition dimension disagrees with header k");
    if (r.pair) {
      const Vec6 s = r.pair->target.vector();
      out += text::join_doubles(s.data(), 6, ',');
      out += ',';
    }
    out += text::join_doubles(r.cond.values.data(), static_cast<std::size_t>(r.cond.dim()), ',');
    out += '\n';
  }
  return out;
}

FeatureSet parse_features(const std::string& text) {
  FeatureSet set;
  bool have_k = false;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string_view key = text::trim(line.substr(1, eq - 1));
      const std::string_view value = text::trim(line.substr(eq + 1));
      if (key == "k") {
        const auto k = text::parse_int(value, line_no);
        if (k < 1) throw ParseError("k must be positive", line_no);
        set.header.k = static_cast<int>(k);
        have_k = true;
      } else if (key == "lift_seed") {
        set.header.lift_seed = text::parse_uint(value, line_no);
      } else if (key == "ambiguity") {
        set.header.ambiguity = text::parse_double(value, line_no);
      } else if (key == "noise") {
        set.header.noise = text::parse_double(value, line_no);
      }
      continue;
    }
    if (!have_k) throw ParseError("data row before '#k=' header", line_no);
    const auto fields = text::split(line, ',');
    const auto k = static_cast<std::size_t>(set.header.k);
    if (fields.size() != k && fields.size() != k + 6) {
      throw ParseError("expected " + std::to_string(k) + " or " + std::to_string(k + 6) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    std::vector<double> v;
    v.reserve(fields.size());
    for (const auto& f : fields) v.push_back(text::parse_double(f, line_no));

    FeatureRow row;
    const std::size_t offset = fields.size() - k;
    row.cond.values = Eigen::Map<const Eigen::VectorXd>(v.data() + offset, static_cast<Eigen::Index>(k));
    if (offset == 6) {
      TrainingPair p;
      p.target = MotionState::from_vector(Eigen::Map<const Vec6>(v.data()));
      p.cond = row.cond;
      if (p.target.rho.norm() > std::numbers::pi + 1e-9) {
        throw ParseError("ground-truth rotation exceeds pi", line_no);
      }
      row.pair = std::move(p);
    }
    set.rows.push_back(std::move(row));
  }
  if (!have_k) throw ParseError("missing '#k=' header");
  return set;
}

void write_features(const FeatureSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << features_to_string(set);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

FeatureSet ingest_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_features(ss.str());
}

}  // namespace fmvo
