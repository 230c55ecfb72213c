#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace leaklab {

// Seven effectful verbs. IF is not a verb of its own: a guarded primitive
// carries its guard inline, since IF wraps exactly one primitive.
enum class Verb { kRead, kWrite, kDelete, kExec, kEgress, kSetuid, kSchedule };

enum class GuardKind { kNone, kExists, kWritable };

struct Primitive {
  Verb verb;
  std::string arg1;  // path for READ/WRITE/DELETE/SETUID, name for EXEC, url for EGRESS, spec for SCHEDULE
  std::string arg2;  // data_ref for WRITE/EGRESS, args for EXEC, command for SCHEDULE
  GuardKind guard = GuardKind::kNone;
  std::string guard_arg;
  int line = 0;

  bool operator==(const Primitive& other) const {
    return verb == other.verb && arg1 == other.arg1 && arg2 == other.arg2 &&
           guard == other.guard && guard_arg == other.guard_arg;
  }
};

struct PrimitiveProgram {
  std::vector<Primitive> prims;
  std::vector<std::string> header_deps;  // from #use directives before the first primitive
};

// Line grammar, one primitive per line:
//   READ <path>
//   WRITE <path> <data_ref>
//   DELETE <path>
//   EXEC <name> [args...]
//   EGRESS <url> <data_ref>
//   SETUID <path>
//   SCHEDULE <spec> <command...>
//   IF <guard>(<path>) <primitive>
// Blank lines and lines starting with # are skipped; `#use NAME` in the
// header declares a dependency. Throws ParseError with the line number.
PrimitiveProgram parse_primitives(std::string_view script);

// Canonical rendering; parse_primitives(to_text(p)) reproduces p.
std::string to_text(const PrimitiveProgram& program);

// A data_ref of the form rK names the K-th READ capture (1-based).
bool is_register_ref(std::string_view data_ref);
int register_index(std::string_view data_ref);

// Checks every register ref points at a READ earlier in the program.
// Returns an error description, or nullopt when the flow is valid.
std::optional<std::string> validate_register_flow(const PrimitiveProgram& program);

const char* verb_name(Verb verb);

// Channel tag for the verb's side effect, from the closed channel vocabulary.
const char* verb_channel(Verb verb);

// The literal a target policy looks for in the documentation before it
// will act: the path, url, or name, and the command text for SCHEDULE.
std::string concreteness_token(const Primitive& prim);

bool program_has_register_refs(const PrimitiveProgram& program);
int guard_count(const PrimitiveProgram& program);
std::size_t whitespace_token_count(std::string_view text);

}  // namespace leaklab
