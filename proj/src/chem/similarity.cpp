#include "spescreen/chem/similarity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "spescreen/error.hpp"

namespace spescreen::chem {
namespace {

double tanimoto_unchecked(const Fingerprint& a, const Fingerprint& b) {
  const auto wa = a.words();
  const auto wb = b.words();
  std::size_t ca = 0, cb = 0, both = 0;
  for (std::size_t k = 0; k < wa.size(); ++k) {
    ca += static_cast<std::size_t>(std::popcount(wa[k]));
    cb += static_cast<std::size_t>(std::popcount(wb[k]));
    both += static_cast<std::size_t>(std::popcount(wa[k] & wb[k]));
  }
  const std::size_t denom = ca + cb - both;
  if (denom == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(denom);
}

std::vector<double> batch_serial(const Fingerprint& ref, std::span<const IdentifiedFingerprint> db) {
  std::vector<double> out(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) out[i] = tanimoto_unchecked(ref, db[i].fingerprint);
  return out;
}

std::vector<double> batch_parallel(const Fingerprint& ref, std::span<const IdentifiedFingerprint> db) {
  std::vector<double> out(db.size());
  const auto n = static_cast<std::ptrdiff_t>(db.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = tanimoto_unchecked(ref, db[static_cast<std::size_t>(i)].fingerprint);
  }
  return out;
}

}  // namespace

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.nbits() != b.nbits()) {
    throw ValidationError("fingerprint length mismatch: " + std::to_string(a.nbits()) + " vs " +
                          std::to_string(b.nbits()));
  }
  return tanimoto_unchecked(a, b);
}

std::vector<double> tanimoto_batch(const Fingerprint& reference, std::span<const IdentifiedFingerprint> database,
                                   Exec exec) {
  for (const auto& e : database) {
    if (e.fingerprint.nbits() != reference.nbits()) {
      throw ValidationError("fingerprint length mismatch for entry '" + e.id + "'");
    }
  }
  return exec == Exec::Serial ? batch_serial(reference, database) : batch_parallel(reference, database);
}

Ranking rank_by_similarity(const Fingerprint& reference, std::span<const IdentifiedFingerprint> database,
                           Exec exec) {
  if (database.empty()) throw ValidationError("cannot rank against an empty database");
  const auto sims = tanimoto_batch(reference, database, exec);
  Ranking out;
  out.entries.reserve(database.size());
  for (std::size_t i = 0; i < database.size(); ++i) out.entries.push_back({database[i].id, sims[i], i});
  std::stable_sort(out.entries.begin(), out.entries.end(), [](const RankedEntry& x, const RankedEntry& y) {
    if (x.similarity != y.similarity) return x.similarity > y.similarity;
    return x.id < y.id;
  });

  RankingSummary& s = out.summary;
  s.total = sims.size();
  for (double v : sims) {
    if (v <= 0.4) ++s.at_or_below_0_4;
    if (v >= 0.5) ++s.at_or_above_0_5;
    if (v > 0.85) ++s.above_0_85;
    if (v == 1.0) ++s.identical;
  }
  s.fraction_at_or_below_0_4 = static_cast<double>(s.at_or_below_0_4) / static_cast<double>(s.total);
  s.fraction_at_or_above_0_5 = static_cast<double>(s.at_or_above_0_5) / static_cast<double>(s.total);
  return out;
}

double linear_kernel_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("descriptor dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) throw ValidationError("descriptor has non-finite entry");
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ValidationError("descriptor has zero norm");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace spescreen::chem
