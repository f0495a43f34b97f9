#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "distill/dataset.hpp"
#include "distill/policy.hpp"
#include "distill/teacher.hpp"

namespace distill {

/// Malformed, truncated, or version-mismatched artifact file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int kStoreVersion = 1;

struct StoredPolicy {
  TabularPolicy policy;
  nlohmann::json metadata;
};

// Documents are JSON objects with a "format" tag and an integer "version".
// Reals are written with round-trip precision; non-finite reals are written
// as the strings "inf", "-inf" and "nan".

nlohmann::json policy_to_json(const TabularPolicy& policy, const nlohmann::json& metadata = {});
StoredPolicy policy_from_json(const nlohmann::json& doc);
void save_policy(const std::filesystem::path& path, const TabularPolicy& policy,
                 const nlohmann::json& metadata = {});
StoredPolicy load_policy(const std::filesystem::path& path);

nlohmann::json teacher_to_json(const TeacherPolicy& tp);
TeacherPolicy teacher_from_json(const nlohmann::json& doc);
void save_teacher(const std::filesystem::path& path, const TeacherPolicy& tp);
TeacherPolicy load_teacher(const std::filesystem::path& path);

nlohmann::json dataset_to_json(const AggDataset& ds);
AggDataset dataset_from_json(const nlohmann::json& doc);
void save_dataset(const std::filesystem::path& path, const AggDataset& ds);
AggDataset load_dataset(const std::filesystem::path& path);

nlohmann::json real_to_json(double x);
double real_from_json(const nlohmann::json& j);
nlohmann::json observation_to_json(const Observation& o);
Observation observation_from_json(const nlohmann::json& j);
nlohmann::json state_to_json(const PrivilegedState& s);
PrivilegedState state_from_json(const nlohmann::json& j);

/// Checks the format tag and version; throws FormatError otherwise.
void check_header(const nlohmann::json& doc, const std::string& format);
nlohmann::json read_document(const std::filesystem::path& path);
/// Writes via a temporary file and rename so readers never see a partial file.
void write_document(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace distill
