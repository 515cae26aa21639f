#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spescreen/chem/fingerprint.hpp"
#include "spescreen/exec.hpp"

namespace spescreen::chem {

// S = c / (a + b - c) with a, b the popcounts and c the popcount of A & B.
// Two empty fingerprints are defined to have similarity 1.
// Throws ValidationError when nbits differ.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

struct IdentifiedFingerprint {
  std::string id;
  Fingerprint fingerprint;
};

struct RankedEntry {
  std::string id;
  double similarity = 0.0;
  std::size_t index = 0;  // position in the input database
};

struct RankingSummary {
  std::size_t total = 0;
  std::size_t at_or_below_0_4 = 0;
  std::size_t at_or_above_0_5 = 0;
  std::size_t above_0_85 = 0;
  std::size_t identical = 0;  // S == 1
  double fraction_at_or_below_0_4 = 0.0;
  double fraction_at_or_above_0_5 = 0.0;
};

struct Ranking {
  std::vector<RankedEntry> entries;  // descending similarity, ties by id
  RankingSummary summary;
};

// Similarity of `reference` against every database entry. The parallel and
// serial kernels produce identical vectors.
std::vector<double> tanimoto_batch(const Fingerprint& reference, std::span<const IdentifiedFingerprint> database,
                                   Exec exec = Exec::Parallel);

// Throws ValidationError for an empty database or inconsistent nbits.
Ranking rank_by_similarity(const Fingerprint& reference, std::span<const IdentifiedFingerprint> database,
                           Exec exec = Exec::Parallel);

// Normalized linear kernel a.b / (|a||b|). Throws ValidationError for a
// zero-norm or non-finite vector or mismatched dimensions.
double linear_kernel_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace spescreen::chem
