#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cocrf/detail/text.hpp"
#include "cocrf/energy.hpp"
#include "cocrf/error.hpp"
#include "cocrf/features.hpp"

namespace cocrf {

// MODEL file layout:
//   MODEL 1
//   classes <K> unary_dim <du> pairwise_dim <dp>
//   <du reals>
//   <dp reals>
// followed by optional keyed sections in any order:
//   unary_map raw|svm feat_dim <d>
//   relations 4|1
//   pairwise_channels <name>...
//   mode plain|mutex|cooccur alpha <a>
//   standardize <d>            then two lines: means, scales
//   svm <K> <d>                then K lines: <d weights> <bias>

inline std::string write_model(const CrfModel& m) {
  using detail::append_reals;
  using detail::format_real;
  const auto& map = m.unary_map;
  std::string out = "MODEL 1\n";
  out += "classes " + std::to_string(map.num_classes) + " unary_dim " + std::to_string(m.weights.unary.size()) +
         " pairwise_dim " + std::to_string(m.weights.pairwise.size()) + "\n";
  std::string line;
  append_reals(line, m.weights.unary);
  out += (line.empty() ? line : line.substr(1)) + "\n";
  line.clear();
  append_reals(line, m.weights.pairwise);
  out += (line.empty() ? line : line.substr(1)) + "\n";
  out += std::string("unary_map ") + (map.mode == UnaryMode::RawIndicator ? "raw" : "svm") + " feat_dim " +
         std::to_string(map.feat_dim) + "\n";
  out += "relations " + std::to_string(m.layout.blocks()) + "\n";
  out += "pairwise_channel_dim " + std::to_string(m.layout.channel_dim) + "\n";
  if (!m.pairwise_channels.empty()) {
    out += "pairwise_channels";
    for (const auto& c : m.pairwise_channels) out += " " + c;
    out += "\n";
  }
  out += "mode " + std::string(to_string(m.mode.kind)) + " alpha " + format_real(m.mode.alpha) + "\n";
  if (!map.standardizer.identity()) {
    out += "standardize " + std::to_string(map.standardizer.mean.size()) + "\n";
    line.clear();
    append_reals(line, map.standardizer.mean);
    out += line.substr(1) + "\n";
    line.clear();
    append_reals(line, map.standardizer.scale);
    out += line.substr(1) + "\n";
  }
  if (map.svm) {
    const auto& s = *map.svm;
    out += "svm " + std::to_string(s.num_classes) + " " + std::to_string(s.dim) + "\n";
    for (int k = 0; k < s.num_classes; ++k) {
      line.clear();
      append_reals(line, s.row(k));
      append_reals(line, std::span<const double>(&s.biases[k], 1));
      out += line.substr(1) + "\n";
    }
  }
  return out;
}

namespace detail {

inline std::vector<double> read_reals(LineReader& r, std::size_t count, std::string_view what) {
  std::vector<double> v;
  v.reserve(count);
  if (count == 0) return v;
  auto tok = r.expect(Errc::MalformedRecord, what);
  if (tok.size() != count)
    throw Error(Errc::DimensionMismatch,
                std::string(what) + " has " + std::to_string(tok.size()) + " values, expected " + std::to_string(count),
                r.line());
  for (auto t : tok) v.push_back(r.real(t));
  return v;
}

}  // namespace detail

inline CrfModel parse_model(std::istream& in) {
  detail::LineReader r(in);
  auto tok = r.expect(Errc::MalformedHeader, "MODEL header");
  if (tok.size() != 2 || tok[0] != "MODEL" || tok[1] != "1") throw Error(Errc::MalformedHeader, "expected 'MODEL 1'", r.line());
  tok = r.expect(Errc::MalformedHeader, "classes line");
  if (tok.size() != 6 || tok[0] != "classes" || tok[2] != "unary_dim" || tok[4] != "pairwise_dim")
    throw Error(Errc::MalformedHeader, "expected 'classes <K> unary_dim <du> pairwise_dim <dp>'", r.line());
  const auto K = r.integer(tok[1], Errc::MalformedHeader);
  const auto du = r.integer(tok[3], Errc::MalformedHeader);
  const auto dp = r.integer(tok[5], Errc::MalformedHeader);
  if (K < 2 || du < 0 || dp < 0) throw Error(Errc::MalformedHeader, "invalid model dimensions", r.line());

  CrfModel m;
  m.weights.unary = detail::read_reals(r, static_cast<std::size_t>(du), "unary weights");
  m.weights.pairwise = detail::read_reals(r, static_cast<std::size_t>(dp), "pairwise weights");
  m.unary_map.num_classes = static_cast<int>(K);
  // Defaults for a bare model: raw features, four relation blocks.
  m.unary_map.mode = UnaryMode::RawIndicator;
  m.unary_map.feat_dim = static_cast<int>(du / K);
  m.layout.relation_blocks = true;
  bool channel_dim_given = false;

  while (r.next(tok)) {
    const auto key = tok[0];
    if (key == "unary_map" && tok.size() == 4 && tok[2] == "feat_dim") {
      if (tok[1] == "raw")
        m.unary_map.mode = UnaryMode::RawIndicator;
      else if (tok[1] == "svm")
        m.unary_map.mode = UnaryMode::SvmConfidence;
      else
        throw Error(Errc::MalformedRecord, "unknown unary map '" + std::string(tok[1]) + "'", r.line());
      m.unary_map.feat_dim = static_cast<int>(r.integer(tok[3]));
    } else if (key == "relations" && tok.size() == 2) {
      const auto b = r.integer(tok[1]);
      if (b != 1 && b != kNumRelations) throw Error(Errc::MalformedRecord, "relations must be 1 or 4", r.line());
      m.layout.relation_blocks = b == kNumRelations;
    } else if (key == "pairwise_channel_dim" && tok.size() == 2) {
      m.layout.channel_dim = static_cast<int>(r.integer(tok[1]));
      channel_dim_given = true;
    } else if (key == "pairwise_channels") {
      m.pairwise_channels.assign(tok.begin() + 1, tok.end());
    } else if (key == "mode" && tok.size() == 4 && tok[2] == "alpha") {
      try {
        m.mode.kind = parse_pairwise_kind(tok[1]);
      } catch (const Error& e) {
        throw Error(Errc::MalformedRecord, e.what(), r.line());
      }
      m.mode.alpha = r.real(tok[3]);
    } else if (key == "standardize" && tok.size() == 2) {
      const auto d = static_cast<std::size_t>(r.integer(tok[1]));
      m.unary_map.standardizer.mean = detail::read_reals(r, d, "standardization means");
      m.unary_map.standardizer.scale = detail::read_reals(r, d, "standardization scales");
    } else if (key == "svm" && tok.size() == 3) {
      LinearSvmModel s;
      s.num_classes = static_cast<int>(r.integer(tok[1]));
      s.dim = static_cast<int>(r.integer(tok[2]));
      if (s.num_classes < 2 || s.dim < 0) throw Error(Errc::MalformedRecord, "invalid svm dimensions", r.line());
      for (int k = 0; k < s.num_classes; ++k) {
        auto row = detail::read_reals(r, static_cast<std::size_t>(s.dim) + 1, "svm row");
        s.biases.push_back(row.back());
        s.weights.insert(s.weights.end(), row.begin(), row.end() - 1);
      }
      m.unary_map.svm = std::move(s);
    } else {
      throw Error(Errc::MalformedRecord, "unknown model section '" + std::string(key) + "'", r.line());
    }
  }

  const int blocks = m.layout.blocks();
  if (!channel_dim_given) {
    if (dp % blocks != 0) throw Error(Errc::DimensionMismatch, "pairwise_dim is not a multiple of the relation count");
    m.layout.channel_dim = static_cast<int>(dp / blocks);
  }
  if (m.layout.dim() != dp) throw Error(Errc::DimensionMismatch, "pairwise_dim does not match relations x channel dim");
  if (m.unary_map.unary_dim() != du) throw Error(Errc::DimensionMismatch, "unary_dim does not match the unary map");
  const auto& st = m.unary_map.standardizer;
  if (!st.identity() && static_cast<int>(st.mean.size()) != m.unary_map.feat_dim)
    throw Error(Errc::DimensionMismatch, "standardization length differs from feat_dim");
  if (m.unary_map.mode == UnaryMode::SvmConfidence) {
    if (!m.unary_map.svm) throw Error(Errc::MalformedRecord, "svm unary map without an svm section");
    if (m.unary_map.svm->num_classes != K || m.unary_map.svm->dim != m.unary_map.feat_dim)
      throw Error(Errc::DimensionMismatch, "svm section does not match K and feat_dim");
  }
  return m;
}

inline CrfModel parse_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_model(in);
}

inline CrfModel read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return parse_model(in);
}

}  // namespace cocrf
