#include "voyopt/clustering.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "voyopt/io.hpp"

namespace voyopt {

ClusterSet percentile_clusters(const std::vector<Voyage>& voyages) {
  if (voyages.empty()) throw DataError("percentile_clusters: empty corpus");
  struct Entry {
    double score;
    std::string id;
  };
  std::vector<Entry> order;
  order.reserve(voyages.size());
  for (const auto& v : voyages) {
    if (!v.eff_score) {
      throw DataError("percentile_clusters: voyage " + v.id + " is unscored");
    }
    order.push_back({*v.eff_score, v.id});
  }
  std::sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });

  const double n = static_cast<double>(order.size());
  const double pct[4] = {0.10, 0.25, 0.50, 0.75};
  ClusterSet cs;
  for (int k = 0; k < 4; ++k) {
    const auto take = static_cast<std::size_t>(std::ceil(pct[k] * n));
    for (std::size_t i = 0; i < take; ++i) cs.members[k].push_back(order[i].id);
    std::sort(cs.members[k].begin(), cs.members[k].end());
  }
  return cs;
}

int cluster_index(const std::string& name) {
  for (int k = 0; k < 4; ++k) {
    if (name == kClusterNames[k]) return k;
  }
  throw ConfigError("unknown cluster name: " + name);
}

void save_clusters(const std::filesystem::path& path, const ClusterSet& cs) {
  nlohmann::json j;
  j["schema_version"] = 1;
  for (int k = 0; k < 4; ++k) j["clusters"][kClusterNames[k]] = cs.members[k];
  atomic_write_file(path, j.dump(2) + "\n");
}

ClusterSet load_clusters(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_clusters: " + std::string(e.what()));
  }
  ClusterSet cs;
  try {
    for (int k = 0; k < 4; ++k) {
      cs.members[k] =
          j.at("clusters").at(kClusterNames[k]).get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_clusters: malformed cluster file: " +
                    std::string(e.what()));
  }
  return cs;
}

}  // namespace voyopt
