#include "kgsens/graph_audit.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "kgsens/error.hpp"

namespace kgsens {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

// Undirected simple graph over local vertex indices 0..n-1.
struct SimpleGraph {
    std::vector<std::vector<std::uint32_t>> adjacency;

    std::size_t size() const { return adjacency.size(); }
    bool adjacent(std::uint32_t a, std::uint32_t b) const {
        const auto& row = adjacency[a];
        return std::binary_search(row.begin(), row.end(), b);
    }
};

struct DistanceSummary {
    double diameter = 0.0;
    double mean_distance = 0.0;
};

DistanceSummary distances(const SimpleGraph& g, std::size_t sample_sources) {
    const std::size_t n = g.size();
    if (n < 2) return {};
    std::vector<std::uint32_t> sources;
    if (sample_sources == 0 || sample_sources >= n) {
        sources.resize(n);
        std::iota(sources.begin(), sources.end(), 0);
    } else {
        const double stride = static_cast<double>(n) / static_cast<double>(sample_sources);
        for (std::size_t i = 0; i < sample_sources; ++i) {
            sources.push_back(static_cast<std::uint32_t>(std::floor(static_cast<double>(i) * stride)));
        }
    }
    std::vector<std::int32_t> dist(n, -1);
    std::vector<std::uint32_t> queue(n);
    std::uint64_t eccentricity_max = 0;
    long double sum = 0.0L;
    std::uint64_t pairs = 0;
    for (auto source : sources) {
        std::fill(dist.begin(), dist.end(), -1);
        std::size_t head = 0, tail = 0;
        queue[tail++] = source;
        dist[source] = 0;
        while (head < tail) {
            auto v = queue[head++];
            for (auto w : g.adjacency[v]) {
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    queue[tail++] = w;
                    sum += dist[w];
                    ++pairs;
                }
            }
        }
        eccentricity_max = std::max<std::uint64_t>(eccentricity_max, static_cast<std::uint64_t>(dist[queue[tail - 1]]));
    }
    return {static_cast<double>(eccentricity_max), pairs ? static_cast<double>(sum / pairs) : 0.0};
}

// Unit-capacity max flow on the vertex-split graph, used for local vertex
// connectivity between two non-adjacent vertices. Stops once `limit`
// disjoint paths are found.
class VertexFlow {
public:
    explicit VertexFlow(const SimpleGraph& g) : n_(g.size()) {
        // node v_in = 2v, v_out = 2v+1
        head_.assign(2 * n_, -1);
        for (std::uint32_t v = 0; v < n_; ++v) {
            add_edge(2 * v, 2 * v + 1);
            for (auto w : g.adjacency[v]) add_edge(2 * v + 1, 2 * w);
        }
        base_cap_ = cap_;
    }

    std::size_t local_connectivity(std::uint32_t s, std::uint32_t t, std::size_t limit) {
        cap_ = base_cap_;
        // Source and sink have unbounded internal capacity.
        const std::uint32_t source = 2 * s + 1;
        const std::uint32_t sink = 2 * t;
        std::size_t flow = 0;
        std::vector<std::int32_t> via(2 * n_);
        std::vector<std::uint32_t> queue;
        queue.reserve(2 * n_);
        while (flow < limit) {
            std::fill(via.begin(), via.end(), -2);
            via[source] = -1;
            queue.clear();
            queue.push_back(source);
            bool found = false;
            for (std::size_t qi = 0; qi < queue.size() && !found; ++qi) {
                auto u = queue[qi];
                for (auto e = head_[u]; e >= 0; e = next_[e]) {
                    auto v = to_[e];
                    if (cap_[e] > 0 && via[v] == -2) {
                        via[v] = e;
                        if (v == sink) {
                            found = true;
                            break;
                        }
                        queue.push_back(v);
                    }
                }
            }
            if (!found) break;
            for (auto v = sink; v != source;) {
                auto e = via[v];
                cap_[e] -= 1;
                cap_[e ^ 1] += 1;
                v = to_[e ^ 1];
            }
            ++flow;
        }
        return flow;
    }

private:
    void add_edge(std::uint32_t a, std::uint32_t b) {
        to_.push_back(b);
        cap_.push_back(1);
        next_.push_back(head_[a]);
        head_[a] = static_cast<std::int32_t>(to_.size() - 1);
        to_.push_back(a);
        cap_.push_back(0);
        next_.push_back(head_[b]);
        head_[b] = static_cast<std::int32_t>(to_.size() - 1);
    }

    std::size_t n_;
    std::vector<std::int32_t> head_;
    std::vector<std::uint32_t> to_;
    std::vector<std::int32_t> cap_;
    std::vector<std::int32_t> base_cap_;
    std::vector<std::int32_t> next_;
};

// Even's algorithm: vertex connectivity of a connected simple graph.
std::size_t vertex_connectivity(const SimpleGraph& g) {
    const std::size_t n = g.size();
    if (n < 2) return 0;
    std::size_t best = n - 1;
    for (const auto& row : g.adjacency) best = std::min(best, row.size());
    if (best <= 1) return best;
    VertexFlow flow(g);
    for (std::uint32_t i = 0; i <= best && i < n; ++i) {
        for (std::uint32_t j = i + 1; j < n; ++j) {
            if (g.adjacent(i, j)) continue;
            best = std::min(best, flow.local_connectivity(i, j, best));
            if (best <= 1) return best;
        }
    }
    return best;
}

std::vector<Triple> all_triples(const KnowledgeGraph& kg) {
    std::vector<Triple> out;
    out.reserve(kg.total_edge_count());
    for (auto which : {Split::train, Split::valid, Split::test}) {
        const auto& s = kg.split(which);
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

std::uint64_t pair_key(EntityId a, EntityId b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

}  // namespace

GraphStatistics graph_statistics(const KnowledgeGraph& kg, const StatisticsOptions& options) {
    const std::size_t n = kg.entity_count();
    const auto triples = all_triples(kg);
    if (n == 0 || triples.empty()) throw DataError("graph statistics need a non-empty graph");

    GraphStatistics stats;
    stats.node_count = n;
    stats.edge_count = triples.size();
    stats.edge_type_count = kg.relation_count();
    stats.density = n > 1 ? static_cast<double>(stats.edge_count) /
                                (static_cast<double>(n) * static_cast<double>(n - 1) *
                                 static_cast<double>(stats.edge_type_count))
                          : 0.0;

    std::vector<std::size_t> degree(n, 0);
    DisjointSets components(n);
    for (const auto& t : triples) {
        ++degree[t.subject];
        ++degree[t.object];
        components.unite(t.subject, t.object);
    }

    const double nn = static_cast<double>(n);
    stats.mean_degree = 2.0 * static_cast<double>(stats.edge_count) / nn;
    stats.max_degree = *std::max_element(degree.begin(), degree.end());
    {
        auto sorted = degree;
        std::sort(sorted.begin(), sorted.end());
        stats.median_degree = n % 2 ? static_cast<double>(sorted[n / 2])
                                    : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
    }
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (auto d : degree) {
        const double c = static_cast<double>(d) - stats.mean_degree;
        m2 += c * c;
        m3 += c * c * c;
        m4 += c * c * c * c;
    }
    m2 /= nn;
    m3 /= nn;
    m4 /= nn;
    stats.std_degree = std::sqrt(m2);
    stats.skewness_degree = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
    stats.kurtosis_degree = m2 > 0 ? m4 / (m2 * m2) - 3.0 : 0.0;

    // Group vertices by component; local ids follow global id order.
    std::unordered_map<std::size_t, std::size_t> component_index;
    std::vector<std::vector<EntityId>> members;
    std::vector<std::uint32_t> local(n);
    for (EntityId v = 0; v < n; ++v) {
        auto root = components.find(v);
        auto [it, inserted] = component_index.emplace(root, members.size());
        if (inserted) members.emplace_back();
        local[v] = static_cast<std::uint32_t>(members[it->second].size());
        members[it->second].push_back(v);
    }
    stats.component_count = members.size();
    if (options.skip_distance_family) return stats;

    std::vector<SimpleGraph> graphs(members.size());
    for (std::size_t c = 0; c < members.size(); ++c) graphs[c].adjacency.resize(members[c].size());
    for (const auto& t : triples) {
        if (t.subject == t.object) continue;
        auto& g = graphs[component_index.at(components.find(t.subject))];
        g.adjacency[local[t.subject]].push_back(local[t.object]);
        g.adjacency[local[t.object]].push_back(local[t.subject]);
    }
    double diameter_sum = 0.0, distance_sum = 0.0, connectivity_sum = 0.0;
    for (auto& g : graphs) {
        for (auto& row : g.adjacency) {
            std::sort(row.begin(), row.end());
            row.erase(std::unique(row.begin(), row.end()), row.end());
        }
        auto d = distances(g, options.sample_sources);
        diameter_sum += d.diameter;
        distance_sum += d.mean_distance;
        connectivity_sum += static_cast<double>(vertex_connectivity(g));
    }
    const double cc = static_cast<double>(graphs.size());
    stats.mean_component_diameter = diameter_sum / cc;
    stats.mean_component_distance = distance_sum / cc;
    stats.mean_component_connectivity = connectivity_sum / cc;
    stats.distances_sampled = options.sample_sources != 0;
    return stats;
}

void write_statistics_csv(std::ostream& out, const GraphStatistics& s) {
    out << "node_count,edge_count,edge_type_count,density,component_count,mean_component_diameter,"
           "mean_component_distance,mean_component_connectivity,mean_degree,median_degree,max_degree,"
           "std_degree,skewness_degree,kurtosis_degree,distances_sampled\n";
    const auto flags = out.flags();
    out << s.node_count << ',' << s.edge_count << ',' << s.edge_type_count << ',' << std::setprecision(6)
        << std::scientific << s.density << std::defaultfloat << std::setprecision(10) << ',' << s.component_count
        << ',' << s.mean_component_diameter << ',' << s.mean_component_distance << ','
        << s.mean_component_connectivity << ',' << s.mean_degree << ',' << s.median_degree << ',' << s.max_degree
        << ',' << s.std_degree << ',' << s.skewness_degree << ',' << s.kurtosis_degree << ','
        << (s.distances_sampled ? "true" : "false") << '\n';
    out.flags(flags);
}

std::vector<OverlapPair> inverse_overlap(const KnowledgeGraph& kg) {
    const std::size_t r_count = kg.relation_count();
    auto index = [](const std::vector<Triple>& triples) {
        std::unordered_map<std::uint64_t, std::vector<RelationId>> by_pair;
        for (const auto& t : triples) by_pair[pair_key(t.subject, t.object)].push_back(t.predicate);
        return by_pair;
    };
    auto tally = [&](const std::vector<Triple>& source,
                     const std::unordered_map<std::uint64_t, std::vector<RelationId>>& target, OverlapScope scope) {
        std::vector<std::size_t> totals(r_count, 0);
        std::map<std::pair<RelationId, RelationId>, std::size_t> matched;
        for (const auto& t : source) {
            ++totals[t.predicate];
            auto it = target.find(pair_key(t.object, t.subject));
            if (it == target.end()) continue;
            std::vector<RelationId> seen;
            for (auto r : it->second) {
                // A self-loop reversed is the triple itself.
                if (t.subject == t.object && r == t.predicate) continue;
                if (std::find(seen.begin(), seen.end(), r) != seen.end()) continue;
                seen.push_back(r);
                ++matched[{t.predicate, r}];
            }
        }
        std::vector<OverlapPair> pairs;
        for (const auto& [key, count] : matched) {
            OverlapPair p;
            p.relation = key.first;
            p.inverse = key.second;
            p.scope = scope;
            p.matched = count;
            p.total = totals[key.first];
            p.overlap = static_cast<double>(count) / static_cast<double>(p.total);
            pairs.push_back(p);
        }
        return pairs;
    };

    std::vector<Triple> heldout = kg.valid();
    heldout.insert(heldout.end(), kg.test().begin(), kg.test().end());
    auto pairs = tally(heldout, index(kg.train()), OverlapScope::heldout);
    const auto everything = all_triples(kg);
    auto graph_pairs = tally(everything, index(everything), OverlapScope::graph);
    pairs.insert(pairs.end(), graph_pairs.begin(), graph_pairs.end());
    return pairs;
}

LeakageReport flag_leaky_relations(const KnowledgeGraph& kg, double threshold) {
    return flag_leaky_relations(kg, inverse_overlap(kg), threshold);
}

LeakageReport flag_leaky_relations(const KnowledgeGraph& kg, std::vector<OverlapPair> pairs, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw UsageError("leakage threshold must lie in (0, 1]");
    LeakageReport report;
    report.threshold = threshold;
    report.overlap_pairs = std::move(pairs);
    for (const auto& p : report.overlap_pairs) {
        if (p.scope == OverlapScope::graph && p.overlap >= threshold) report.flagged_relations.insert(p.relation);
    }
    const std::size_t heldout = kg.valid().size() + kg.test().size();
    std::size_t covered = 0;
    for (const auto* split : {&kg.valid(), &kg.test()}) {
        for (const auto& t : *split) covered += report.flagged_relations.contains(t.predicate);
    }
    report.heldout_coverage = heldout ? static_cast<double>(covered) / static_cast<double>(heldout) : 0.0;
    return report;
}

void write_leakage_csv(std::ostream& out, const KnowledgeGraph& kg, const LeakageReport& report) {
    out << "relation,inverse_relation,direction,overlap,matched,total,flagged\n";
    const auto flags = out.flags();
    out << std::setprecision(10);
    for (const auto& p : report.overlap_pairs) {
        out << kg.relation_name(p.relation) << ',' << kg.relation_name(p.inverse) << ','
            << (p.scope == OverlapScope::heldout ? "heldout->train" : "graph->graph") << ',' << p.overlap << ','
            << p.matched << ',' << p.total << ','
            << (report.flagged_relations.contains(p.relation) ? "true" : "false") << '\n';
    }
    out.flags(flags);
}

KnowledgeGraph derive_robust_subset(const KnowledgeGraph& kg, const std::set<RelationId>& flagged) {
    for (auto r : flagged) {
        if (r >= kg.relation_count()) throw UsageError("flagged relation id out of range");
    }
    if (flagged.size() == kg.relation_count()) throw DataError("removing every relation leaves an empty graph");
    std::vector<RelationId> remap(kg.relation_count(), std::numeric_limits<RelationId>::max());
    std::vector<std::string> names;
    for (RelationId r = 0; r < kg.relation_count(); ++r) {
        if (flagged.contains(r)) continue;
        remap[r] = static_cast<RelationId>(names.size());
        names.push_back(kg.relation_name(r));
    }
    auto filter = [&](const std::vector<Triple>& in) {
        std::vector<Triple> out;
        for (const auto& t : in) {
            if (flagged.contains(t.predicate)) continue;
            out.push_back({t.subject, remap[t.predicate], t.object});
        }
        return out;
    };
    auto train = filter(kg.train());
    if (train.empty()) throw DataError("derived graph has an empty train split");
    return KnowledgeGraph(kg.entity_names(), std::move(names), std::move(train), filter(kg.valid()),
                          filter(kg.test()));
}

}  // namespace kgsens
