#pragma once

// Paired-demonstration datasets and their binary file format.
//
// File layout (little-endian):
//   "CPVD" | version u32 | n_pairs u64 | k_min u8 | k_max u8 | noise f32 | seed u64
//   per pair:
//     task length u8 | skill ids u8[len]
//     reference: start seed u64 | length u32 | first frame | last frame
//     demo:      start seed u64 | length u32 | actions u8[length] | frames[length + 1]
//   Frames are raw 33x30 RGB bytes, row-major, interleaved channels.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cpv/planner/planner.h"

namespace cpv::planner {

inline constexpr std::uint32_t kDatasetVersion = 1;

struct DemoPair {
    // Evaluation metadata only; training never reads it.
    SkillList task;
    // First and last frames only.
    Trajectory reference;
    Trajectory demo;
};

struct DatasetMeta {
    std::uint64_t seed = 0;
    int k_min = 1;
    int k_max = 1;
    float noise = 0.0f;
};

struct Dataset {
    DatasetMeta meta;
    std::vector<DemoPair> pairs;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

// 90/10 split of pair indices, shuffled with the dataset seed.
Split train_validation_split(const Dataset& ds);

DemoPair generate_pair(std::uint64_t dataset_seed, std::size_t index, int k_min, int k_max, const PlannerConfig& cfg);

// Pair i is generated from derive_seed(seed, i) so the result is identical
// for any worker count.
Dataset generate_dataset(std::uint64_t seed, std::size_t n_pairs, int k_min, int k_max, const PlannerConfig& cfg,
                         int workers = 1);

std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

struct ReplayIssue {
    std::size_t pair = 0;
    std::string reason;
};

struct ReplayReport {
    std::size_t checked = 0;
    std::size_t passed = 0;
    std::vector<ReplayIssue> issues;
};

// Replays every demonstration (and reference endpoints) through the
// environment and checks frames and events against the stored task.
ReplayReport replay_check(const Dataset& ds);

}  // namespace cpv::planner
