#include "distill/store.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace distill {

using nlohmann::json;

json real_to_json(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double real_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw FormatError("expected a real number, got " + j.dump());
}

json observation_to_json(const Observation& o) {
  return json{{"node", o.node}, {"mask", o.mask}, {"done", o.done}};
}

Observation observation_from_json(const json& j) {
  try {
    return Observation{j.at("node").get<int>(), j.at("mask").get<std::uint32_t>(),
                       j.at("done").get<bool>()};
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad observation: ") + e.what());
  }
}

json state_to_json(const PrivilegedState& s) {
  return json{{"context", s.context},
              {"node", s.base.node},
              {"mask", s.base.mask},
              {"done", s.base.done}};
}

PrivilegedState state_from_json(const json& j) {
  try {
    return PrivilegedState{j.at("context").get<int>(),
                           BaseState{j.at("node").get<int>(), j.at("mask").get<std::uint32_t>(),
                                     j.at("done").get<bool>()}};
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad state: ") + e.what());
  }
}

void check_header(const json& doc, const std::string& format) {
  if (!doc.is_object() || !doc.contains("format") || !doc["format"].is_string())
    throw FormatError("missing format header");
  if (doc["format"].get<std::string>() != format)
    throw FormatError("expected format '" + format + "', found '" +
                      doc["format"].get<std::string>() + "'");
  if (!doc.contains("version") || !doc["version"].is_number_integer())
    throw FormatError("missing version field");
  if (doc["version"].get<int>() != kStoreVersion)
    throw FormatError("unsupported version " + std::to_string(doc["version"].get<int>()) +
                      " (expected " + std::to_string(kStoreVersion) + ")");
}

json read_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_document(const std::filesystem::path& path, const json& doc) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << doc.dump(1) << '\n';
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

json policy_to_json(const TabularPolicy& policy, const json& metadata) {
  json rows = json::array();
  for (const auto& [obs, logits] : policy.logits()) {
    json row = observation_to_json(obs);
    json values = json::array();
    for (double x : logits) values.push_back(real_to_json(x));
    row["logits"] = std::move(values);
    rows.push_back(std::move(row));
  }
  return json{{"format", "distill.policy"},
              {"version", kStoreVersion},
              {"kind", "tabular_softmax"},
              {"num_actions", policy.num_actions()},
              {"temperature", real_to_json(policy.temperature())},
              {"metadata", metadata.is_null() ? json::object() : metadata},
              {"rows", std::move(rows)}};
}

StoredPolicy policy_from_json(const json& doc) {
  check_header(doc, "distill.policy");
  try {
    TabularPolicy policy(doc.at("num_actions").get<int>(), real_from_json(doc.at("temperature")));
    for (const auto& row : doc.at("rows")) {
      std::vector<double> logits;
      for (const auto& x : row.at("logits")) logits.push_back(real_from_json(x));
      if (static_cast<int>(logits.size()) != policy.num_actions())
        throw FormatError("logit row has the wrong length");
      policy.set_row(observation_from_json(row), std::move(logits));
    }
    return StoredPolicy{std::move(policy), doc.value("metadata", json::object())};
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad policy document: ") + e.what());
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("bad policy document: ") + e.what());
  }
}

void save_policy(const std::filesystem::path& path, const TabularPolicy& policy,
                 const json& metadata) {
  write_document(path, policy_to_json(policy, metadata));
}

StoredPolicy load_policy(const std::filesystem::path& path) {
  return policy_from_json(read_document(path));
}

json teacher_to_json(const TeacherPolicy& tp) {
  json rows = json::array();
  const int na = tp.num_actions();
  for (std::size_t i = 0; i < tp.index().size(); ++i) {
    json row = state_to_json(tp.index()[i]);
    row["action"] = tp.actions()[i];
    row["value"] = real_to_json(tp.values()[i]);
    json q = json::array();
    for (int a = 0; a < na; ++a) q.push_back(real_to_json(tp.q_table()[i * na + a]));
    row["q"] = std::move(q);
    rows.push_back(std::move(row));
  }
  return json{{"format", "distill.teacher"},
              {"version", kStoreVersion},
              {"num_actions", na},
              {"rows", std::move(rows)}};
}

TeacherPolicy teacher_from_json(const json& doc) {
  check_header(doc, "distill.teacher");
  try {
    const int na = doc.at("num_actions").get<int>();
    std::vector<PrivilegedState> states;
    std::vector<double> values;
    std::vector<double> q;
    std::vector<Action> actions;
    for (const auto& row : doc.at("rows")) {
      states.push_back(state_from_json(row));
      actions.push_back(row.at("action").get<int>());
      values.push_back(real_from_json(row.at("value")));
      const auto& qs = row.at("q");
      if (static_cast<int>(qs.size()) != na) throw FormatError("Q row has the wrong length");
      for (const auto& x : qs) q.push_back(real_from_json(x));
    }
    return TeacherPolicy(StateIndex(std::move(states)), na, std::move(values), std::move(q),
                         std::move(actions));
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad teacher document: ") + e.what());
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("bad teacher document: ") + e.what());
  }
}

void save_teacher(const std::filesystem::path& path, const TeacherPolicy& tp) {
  write_document(path, teacher_to_json(tp));
}

TeacherPolicy load_teacher(const std::filesystem::path& path) {
  return teacher_from_json(read_document(path));
}

json dataset_to_json(const AggDataset& ds) {
  json records = json::array();
  for (const auto& r : ds.records()) {
    json row = observation_to_json(r.observation);
    row["action"] = r.action;
    row["context"] = r.context;
    row["iteration"] = r.iteration;
    records.push_back(std::move(row));
  }
  return json{{"format", "distill.dataset"},
              {"version", kStoreVersion},
              {"num_actions", ds.num_actions()},
              {"records", std::move(records)}};
}

AggDataset dataset_from_json(const json& doc) {
  check_header(doc, "distill.dataset");
  try {
    AggDataset ds(doc.at("num_actions").get<int>());
    for (const auto& row : doc.at("records"))
      ds.append(DatasetRecord{observation_from_json(row), row.at("action").get<int>(),
                              row.at("context").get<int>(), row.at("iteration").get<int>()});
    return ds;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad dataset document: ") + e.what());
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("bad dataset document: ") + e.what());
  }
}

void save_dataset(const std::filesystem::path& path, const AggDataset& ds) {
  write_document(path, dataset_to_json(ds));
}

AggDataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(read_document(path));
}

}  // namespace distill
