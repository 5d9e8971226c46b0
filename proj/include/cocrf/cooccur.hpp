#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "cocrf/detail/text.hpp"
#include "cocrf/error.hpp"
#include "cocrf/graph.hpp"

namespace cocrf {

/// Per-image co-occurrence counts over a labeled corpus.
///
/// coexist(a, b) is the number of images containing both classes a and b.
/// adjacent(r, a, b) is the number of images with at least one edge whose
/// a-labeled endpoint stands in relation r to its b-labeled endpoint. Every
/// edge is counted from both ends, so adjacent(Above, a, b) equals
/// adjacent(Below, b, a).
class CoOccurrenceTable {
 public:
  CoOccurrenceTable() = default;
  explicit CoOccurrenceTable(int num_classes)
      : num_classes_(num_classes), coexist_(cells(), 0) {
    for (auto& a : adjacent_) a.assign(cells(), 0);
  }

  int num_classes() const noexcept { return num_classes_; }

  std::int64_t coexist(Label a, Label b) const { return coexist_[at(a, b)]; }
  std::int64_t adjacent(Relation r, Label a, Label b) const { return adjacent_[index(r)][at(a, b)]; }

  void set_coexist(Label a, Label b, std::int64_t n) {
    coexist_[at(a, b)] = n;
    coexist_[at(b, a)] = n;
  }
  void set_adjacent(Relation r, Label a, Label b, std::int64_t n) {
    adjacent_[index(r)][at(a, b)] = n;
    adjacent_[index(opposite(r))][at(b, a)] = n;
  }

  /// Additive count smoothing; 0 keeps the hard exclusion of unseen pairs.
  double smoothing() const noexcept { return smoothing_; }
  void set_smoothing(double s) {
    if (s < 0.0) throw Error(Errc::InvalidArgument, "smoothing must be >= 0");
    smoothing_ = s;
  }

  /// Relative frequency N^i / N for a != b (0 when the pair never co-exists).
  double frequency(Relation r, Label a, Label b) const {
    const auto n = coexist(a, b);
    return n == 0 ? 0.0 : static_cast<double>(adjacent(r, a, b)) / static_cast<double>(n);
  }

  /// Multiplier g_r(a, b) = N / N^r. Returns nullopt for a pair that was
  /// never observed in relation r, which callers must treat as forbidden.
  /// Equal labels have multiplier 0.
  std::optional<double> multiplier(Relation r, Label a, Label b) const {
    if (a == b) return 0.0;
    const double n = static_cast<double>(coexist(a, b)) + smoothing_;
    const double ni = static_cast<double>(adjacent(r, a, b)) + smoothing_;
    if (ni <= 0.0) return std::nullopt;
    return n / ni;
  }

  /// Table whose multipliers are 1 where N^r > 0 and forbidden elsewhere:
  /// the hard mutual-exclusion special case.
  CoOccurrenceTable thresholded() const {
    CoOccurrenceTable t(num_classes_);
    for (Label a = 0; a < num_classes_; ++a)
      for (Label b = 0; b < num_classes_; ++b) {
        if (a == b) continue;
        t.coexist_[at(a, b)] = coexist(a, b);
        for (auto r : kAllRelations)
          t.adjacent_[index(r)][at(a, b)] = adjacent(r, a, b) > 0 ? coexist(a, b) : 0;
      }
    return t;
  }

  /// Throws InvalidArgument when a count invariant is broken.
  void check_invariants() const {
    for (Label a = 0; a < num_classes_; ++a)
      for (Label b = 0; b < num_classes_; ++b) {
        if (coexist(a, b) != coexist(b, a)) throw Error(Errc::InvalidArgument, "coexist counts are not symmetric");
        if (coexist(a, b) < 0) throw Error(Errc::InvalidArgument, "negative count");
        for (auto r : kAllRelations) {
          const auto ni = adjacent(r, a, b);
          if (ni < 0 || ni > coexist(a, b)) throw Error(Errc::InvalidArgument, "relation count outside [0, N]");
          if (ni != adjacent(opposite(r), b, a)) throw Error(Errc::InvalidArgument, "relation counts are not mirror-symmetric");
          if (a == b && (ni != 0 || coexist(a, b) != 0)) throw Error(Errc::InvalidArgument, "diagonal counts must be zero");
        }
      }
  }

  friend bool operator==(const CoOccurrenceTable&, const CoOccurrenceTable&) = default;

 private:
  std::size_t cells() const { return static_cast<std::size_t>(num_classes_) * num_classes_; }
  std::size_t at(Label a, Label b) const {
    if (a < 0 || b < 0 || a >= num_classes_ || b >= num_classes_) throw Error(Errc::DimensionMismatch, "class outside table");
    return static_cast<std::size_t>(a) * num_classes_ + b;
  }

  int num_classes_ = 0;
  std::vector<std::int64_t> coexist_;
  std::array<std::vector<std::int64_t>, kNumRelations> adjacent_;
  double smoothing_ = 0.0;
};

/// One pass over the corpus; each image adds at most 1 to every count.
inline CoOccurrenceTable build_cooccurrence(std::span<const SuperpixelGraph> corpus) {
  if (corpus.empty()) throw Error(Errc::InvalidArgument, "corpus is empty");
  const int K = corpus.front().num_classes;
  CoOccurrenceTable table(K);
  for (const auto& g : corpus) {
    if (!g.ground_truth) throw Error(Errc::MissingGroundTruth, "co-occurrence statistics need labeled graphs");
    if (g.num_classes != K) throw Error(Errc::InconsistentCorpus, "graphs disagree on class count");
    const auto& y = *g.ground_truth;
    std::set<Label> present;
    for (Label l : y)
      if (l != kVoidLabel) present.insert(l);
    for (Label a : present)
      for (Label b : present)
        if (a < b) table.set_coexist(a, b, table.coexist(a, b) + 1);

    std::set<std::tuple<int, Label, Label>> seen;
    for (const auto& e : g.edges) {
      const Label a = y[e.p], b = y[e.q];
      if (a == b || a == kVoidLabel || b == kVoidLabel) continue;
      seen.emplace(index(e.relation), a, b);
    }
    for (const auto& [r, a, b] : seen) {
      const auto rel = static_cast<Relation>(r);
      // set_adjacent mirrors into (opposite(r), b, a); skip the mirror when it
      // was also realized in this image so it is counted once.
      if (seen.count({index(opposite(rel)), b, a}) && std::make_tuple(index(opposite(rel)), b, a) < std::make_tuple(r, a, b))
        continue;
      table.set_adjacent(rel, a, b, table.adjacent(rel, a, b) + 1);
    }
  }
  return table;
}

inline std::string write_cooccurrence(const CoOccurrenceTable& t) {
  std::string out = "COOCCUR 1\nclasses " + std::to_string(t.num_classes()) + "\n";
  for (Label a = 0; a < t.num_classes(); ++a)
    for (Label b = 0; b < t.num_classes(); ++b) {
      if (a == b) continue;
      bool any = t.coexist(a, b) > 0;
      for (auto r : kAllRelations) any = any || t.adjacent(r, a, b) > 0;
      if (!any) continue;
      out += "pair " + std::to_string(a) + ' ' + std::to_string(b) + ' ' + std::to_string(t.coexist(a, b));
      for (auto r : kAllRelations) out += ' ' + std::to_string(t.adjacent(r, a, b));
      out += '\n';
    }
  return out;
}

inline CoOccurrenceTable parse_cooccurrence(std::istream& in) {
  detail::LineReader reader(in);
  auto tok = reader.expect(Errc::MalformedHeader, "COOCCUR header");
  if (tok.size() != 2 || tok[0] != "COOCCUR" || tok[1] != "1") throw Error(Errc::MalformedHeader, "expected 'COOCCUR 1'", reader.line());
  tok = reader.expect(Errc::MalformedHeader, "classes line");
  if (tok.size() != 2 || tok[0] != "classes") throw Error(Errc::MalformedHeader, "expected 'classes <K>'", reader.line());
  const auto K = reader.integer(tok[1], Errc::MalformedHeader);
  if (K < 1) throw Error(Errc::MalformedHeader, "class count must be positive", reader.line());
  CoOccurrenceTable t(static_cast<int>(K));
  while (reader.next(tok)) {
    if (tok.size() != 8 || tok[0] != "pair") throw Error(Errc::MalformedRecord, "expected 'pair a b N N1 N2 N3 N4'", reader.line());
    const auto a = reader.integer(tok[1]), b = reader.integer(tok[2]);
    if (a < 0 || b < 0 || a >= K || b >= K || a == b) throw Error(Errc::MalformedRecord, "invalid class pair", reader.line());
    t.set_coexist(static_cast<Label>(a), static_cast<Label>(b), reader.integer(tok[3]));
    for (int r = 0; r < kNumRelations; ++r)
      t.set_adjacent(static_cast<Relation>(r), static_cast<Label>(a), static_cast<Label>(b), reader.integer(tok[4 + r]));
  }
  try {
    t.check_invariants();
  } catch (const Error& e) {
    throw Error(Errc::MalformedRecord, e.what(), reader.line());
  }
  return t;
}

inline CoOccurrenceTable read_cooccurrence_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return parse_cooccurrence(in);
}

}  // namespace cocrf
