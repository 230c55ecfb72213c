#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "leaklab/skill.hpp"

namespace leaklab {

enum class Severity { kLow, kMedium, kHigh, kCritical };

const char* severity_name(Severity severity);
Severity parse_severity(const std::string& name);  // throws ParseError

struct Finding {
  std::string layer;
  std::string reason_code;
  std::string category;
  Severity severity = Severity::kLow;
  std::string evidence;
  std::string explanation;
};

nlohmann::json finding_to_json(const Finding& finding);
Finding finding_from_json(const nlohmann::json& value);  // throws ParseError

// Non-blocking iff nothing reaches high.
bool verdict(const std::vector<Finding>& findings);

struct AuditResult {
  bool bypass = true;
  std::vector<Finding> findings;
  std::string auditor_id;
};

class Auditor {
 public:
  virtual ~Auditor() = default;
  virtual const std::string& id() const = 0;
  virtual std::vector<Finding> run(const SkillVariant& variant) = 0;
};

AuditResult audit(const SkillVariant& variant, Auditor& auditor);

// Documentation-only reviewer. Flags a sensitive-capability term whose
// surrounding text does not read like the declared purpose (high), a
// sensitive term in otherwise coherent text (medium), and imperative
// injection phrasing (high). Never looks at scripts.
class JudgeMock : public Auditor {
 public:
  const std::string& id() const override;
  std::vector<Finding> run(const SkillVariant& variant) override;
};

const std::vector<std::string>& risk_lexicon();

// Script-only reviewer mapping dangerous primitives to CWE-style codes;
// a guard wrapper downgrades the hit to medium. Never reads documentation.
class ScannerMock : public Auditor {
 public:
  const std::string& id() const override;
  std::vector<Finding> run(const SkillVariant& variant) override;
};

// Built-in ids: "judge-mock", "scanner-mock". Unknown → UsageError.
std::unique_ptr<Auditor> make_builtin_auditor(const std::string& auditor_id);

struct SubprocessResult {
  int exit_code = -1;
  std::string out;
  bool timed_out = false;
};

SubprocessResult run_subprocess(const std::vector<std::string>& argv,
                                const std::string& input, int timeout_ms);

// External auditor behind the stdio wire contract: the variant record on
// stdin, one native finding per line on stdout, exit 0. severity_map
// translates native severity words before canonical parsing.
class ProcessAuditor : public Auditor {
 public:
  ProcessAuditor(std::string auditor_id, std::vector<std::string> argv,
                 std::map<std::string, std::string> severity_map, int timeout_ms);
  const std::string& id() const override;
  std::vector<Finding> run(const SkillVariant& variant) override;  // throws AdapterFault

 private:
  std::string id_;
  std::vector<std::string> argv_;
  std::map<std::string, std::string> severity_map_;
  int timeout_ms_;
};

struct ReplayItem {
  SkillVariant variant;
  std::string expected_hash;
};

struct ReplayOutcome {
  std::optional<AuditResult> result;
  std::string error;  // set on hash mismatch; the batch keeps going
};

std::vector<ReplayOutcome> replay_audit(const std::vector<ReplayItem>& items,
                                        Auditor& auditor);

}  // namespace leaklab
