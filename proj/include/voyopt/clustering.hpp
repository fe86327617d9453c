/**
 * @file clustering.hpp
 * @brief Nested percentile clusters over voyage efficiency scores.
 */
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "voyopt/core.hpp"

namespace voyopt {

/// Cluster names in nesting order: each contains every id of the previous.
inline constexpr const char* kClusterNames[4] = {"Top10Pr", "Top25Pr",
                                                 "Top50Pr", "Top75Pr"};

struct ClusterSet {
  /// member[i] holds the voyage ids of kClusterNames[i], sorted ascending.
  std::vector<std::string> members[4];
};

/**
 * @brief Splits scored voyages into Top10/25/50/75 percentile clusters.
 *
 * Cluster TopP holds the ceil(P/100 * N) highest-scoring voyages; score ties
 * break by voyage id ascending so membership is deterministic. Nesting
 * Top10 within Top25 within Top50 within Top75 holds by construction.
 * Throws DataError if any voyage lacks a score or the corpus is empty.
 */
ClusterSet percentile_clusters(const std::vector<Voyage>& voyages);

/// Index 0..3 for a cluster name; throws ConfigError on unknown names.
int cluster_index(const std::string& name);

void save_clusters(const std::filesystem::path& path, const ClusterSet& cs);
ClusterSet load_clusters(const std::filesystem::path& path);

}  // namespace voyopt
