#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "kgsens/graph_store.hpp"

namespace kgsens::testing {

inline std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("kgsens_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

inline std::filesystem::path data_dir() { return KGSENS_DATA_DIR; }

// Random graph with distinct triples spread over the three splits.
inline KnowledgeGraph random_graph(std::size_t entities, std::size_t relations, std::size_t triples,
                                   std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<EntityId> e(0, static_cast<EntityId>(entities - 1));
    std::uniform_int_distribution<RelationId> r(0, static_cast<RelationId>(relations - 1));
    std::vector<Triple> all;
    for (std::size_t attempt = 0; all.size() < triples && attempt < triples * 50; ++attempt) {
        Triple t{e(rng), r(rng), e(rng)};
        if (std::find(all.begin(), all.end(), t) == all.end()) all.push_back(t);
    }
    std::vector<Triple> train, valid, test;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (i % 5 == 3 && i > 0) {
            valid.push_back(all[i]);
        } else if (i % 5 == 4) {
            test.push_back(all[i]);
        } else {
            train.push_back(all[i]);
        }
    }
    std::vector<std::string> en, rn;
    for (std::size_t i = 0; i < entities; ++i) en.push_back("e" + std::to_string(i));
    for (std::size_t i = 0; i < relations; ++i) rn.push_back("r" + std::to_string(i));
    return KnowledgeGraph(en, rn, train, valid, test);
}

}  // namespace kgsens::testing
