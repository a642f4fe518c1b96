#pragma once
// Dataset forensics: summary statistics over the union of all splits and
// inverse-relation leakage detection.

#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "kgsens/graph_store.hpp"

namespace kgsens {

struct GraphStatistics {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    std::size_t edge_type_count = 0;
    double density = 0.0;
    std::size_t component_count = 0;
    double mean_component_diameter = 0.0;
    double mean_component_distance = 0.0;
    double mean_component_connectivity = 0.0;
    double mean_degree = 0.0;
    double median_degree = 0.0;
    std::size_t max_degree = 0;
    double std_degree = 0.0;
    double skewness_degree = 0.0;
    double kurtosis_degree = 0.0;
    // True when distances were estimated from sampled source vertices.
    bool distances_sampled = false;
};

struct StatisticsOptions {
    // 0 = exact all-pairs BFS. Otherwise BFS from at most this many
    // sources per component (deterministic stride sampling).
    std::size_t sample_sources = 0;
    // Skip diameter/distance/connectivity entirely (they stay 0).
    bool skip_distance_family = false;
};

// Degree is in+out over all triples of all splits. Distance-family fields
// are computed per weakly connected component on its undirected simple
// projection and averaged over components.
GraphStatistics graph_statistics(const KnowledgeGraph& kg, const StatisticsOptions& options = {});

// Single header row + single value row, fields in declaration order.
void write_statistics_csv(std::ostream& out, const GraphStatistics& stats);

enum class OverlapScope { heldout, graph };

struct OverlapPair {
    RelationId relation = 0;
    RelationId inverse = 0;
    OverlapScope scope = OverlapScope::heldout;
    double overlap = 0.0;
    std::size_t matched = 0;
    std::size_t total = 0;
};

struct LeakageReport {
    std::vector<OverlapPair> overlap_pairs;
    std::set<RelationId> flagged_relations;
    double heldout_coverage = 0.0;
    double threshold = 0.0;
};

// Shipped default for flag_leaky_relations; flags exactly degree_of,
// precedes and derivative_of on UMLS.
inline constexpr double kDefaultLeakageThreshold = 0.97;

// heldout scope: fraction of (s,r,o) in valid∪test with (o,r',s) in train.
// graph scope: same with all splits on both sides. Zero pairs are omitted.
std::vector<OverlapPair> inverse_overlap(const KnowledgeGraph& kg);

// A relation is flagged when its largest graph-scope overlap reaches
// `threshold`. Coverage is the share of valid∪test triples whose relation
// is flagged.
LeakageReport flag_leaky_relations(const KnowledgeGraph& kg, double threshold = kDefaultLeakageThreshold);
LeakageReport flag_leaky_relations(const KnowledgeGraph& kg, std::vector<OverlapPair> pairs, double threshold);

void write_leakage_csv(std::ostream& out, const KnowledgeGraph& kg, const LeakageReport& report);

// Drops every triple whose relation is flagged, keeps all entities and
// re-densifies relation ids in their original order.
KnowledgeGraph derive_robust_subset(const KnowledgeGraph& kg, const std::set<RelationId>& flagged);

}  // namespace kgsens
