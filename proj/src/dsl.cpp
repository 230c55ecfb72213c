#include "leaklab/dsl.hpp"

#include <cctype>
#include <sstream>

#include "leaklab/errors.hpp"

namespace leaklab {

namespace {

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string rest_after(std::string_view line, std::size_t token_count) {
  // Text following the first token_count whitespace-separated tokens.
  std::size_t i = 0;
  for (std::size_t t = 0; t < token_count; ++t) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  }
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  std::size_t end = line.size();
  while (end > i && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
  return std::string(line.substr(i, end - i));
}

[[noreturn]] void fail(int line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

Primitive parse_bare(const std::vector<std::string>& toks, std::string_view raw,
                     std::size_t verb_pos, int line_no) {
  const std::string& verb_tok = toks[verb_pos];
  const std::size_t argc = toks.size() - verb_pos - 1;
  Primitive prim;
  prim.line = line_no;

  auto need = [&](std::size_t n) {
    if (argc != n)
      fail(line_no, verb_tok + " expects " + std::to_string(n) + " argument(s), got " +
                        std::to_string(argc));
  };

  if (verb_tok == "READ") {
    need(1);
    prim.verb = Verb::kRead;
    prim.arg1 = toks[verb_pos + 1];
  } else if (verb_tok == "DELETE") {
    need(1);
    prim.verb = Verb::kDelete;
    prim.arg1 = toks[verb_pos + 1];
  } else if (verb_tok == "SETUID") {
    need(1);
    prim.verb = Verb::kSetuid;
    prim.arg1 = toks[verb_pos + 1];
  } else if (verb_tok == "WRITE") {
    need(2);
    prim.verb = Verb::kWrite;
    prim.arg1 = toks[verb_pos + 1];
    prim.arg2 = toks[verb_pos + 2];
  } else if (verb_tok == "EGRESS") {
    need(2);
    prim.verb = Verb::kEgress;
    prim.arg1 = toks[verb_pos + 1];
    prim.arg2 = toks[verb_pos + 2];
  } else if (verb_tok == "EXEC") {
    if (argc < 1) fail(line_no, "EXEC expects a name");
    prim.verb = Verb::kExec;
    prim.arg1 = toks[verb_pos + 1];
    prim.arg2 = rest_after(raw, verb_pos + 2);
  } else if (verb_tok == "SCHEDULE") {
    if (argc < 2) fail(line_no, "SCHEDULE expects a spec and a command");
    prim.verb = Verb::kSchedule;
    prim.arg1 = toks[verb_pos + 1];
    prim.arg2 = rest_after(raw, verb_pos + 2);
  } else if (verb_tok == "IF") {
    fail(line_no, "IF may not nest inside IF");
  } else {
    fail(line_no, "unknown verb " + verb_tok);
  }
  return prim;
}

}  // namespace

PrimitiveProgram parse_primitives(std::string_view script) {
  PrimitiveProgram program;
  bool in_header = true;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= script.size()) {
    const std::size_t nl = script.find('\n', pos);
    const std::string_view raw =
        script.substr(pos, nl == std::string_view::npos ? script.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? script.size() + 1 : nl + 1;
    ++line_no;

    const std::vector<std::string> toks = split_ws(raw);
    if (toks.empty()) continue;
    if (toks[0][0] == '#') {
      if (toks[0] == "#use") {
        if (toks.size() != 2) fail(line_no, "#use expects one dependency name");
        if (!in_header) fail(line_no, "#use must precede the first primitive");
        program.header_deps.push_back(toks[1]);
      }
      continue;
    }
    in_header = false;

    if (toks[0] == "IF") {
      if (toks.size() < 3) fail(line_no, "IF expects a guard and a primitive");
      const std::string& g = toks[1];
      GuardKind kind;
      std::string_view inner;
      if (g.rfind("exists(", 0) == 0) {
        kind = GuardKind::kExists;
        inner = std::string_view(g).substr(7);
      } else if (g.rfind("writable(", 0) == 0) {
        kind = GuardKind::kWritable;
        inner = std::string_view(g).substr(9);
      } else {
        fail(line_no, "unknown guard " + g);
      }
      if (inner.empty() || inner.back() != ')') fail(line_no, "guard missing closing paren");
      inner.remove_suffix(1);
      if (inner.empty()) fail(line_no, "guard path is empty");

      Primitive prim = parse_bare(toks, raw, 2, line_no);
      prim.guard = kind;
      prim.guard_arg = std::string(inner);
      program.prims.push_back(std::move(prim));
    } else {
      program.prims.push_back(parse_bare(toks, raw, 0, line_no));
    }
  }
  return program;
}

std::string to_text(const PrimitiveProgram& program) {
  std::ostringstream out;
  for (const std::string& dep : program.header_deps) out << "#use " << dep << "\n";
  for (const Primitive& prim : program.prims) {
    if (prim.guard != GuardKind::kNone) {
      out << "IF " << (prim.guard == GuardKind::kExists ? "exists(" : "writable(")
          << prim.guard_arg << ") ";
    }
    out << verb_name(prim.verb) << ' ' << prim.arg1;
    if (prim.verb == Verb::kWrite || prim.verb == Verb::kEgress ||
        prim.verb == Verb::kSchedule || (prim.verb == Verb::kExec && !prim.arg2.empty())) {
      out << ' ' << prim.arg2;
    }
    out << '\n';
  }
  return out.str();
}

bool is_register_ref(std::string_view data_ref) {
  if (data_ref.size() < 2 || data_ref[0] != 'r') return false;
  for (std::size_t i = 1; i < data_ref.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(data_ref[i]))) return false;
  }
  return true;
}

int register_index(std::string_view data_ref) {
  return std::stoi(std::string(data_ref.substr(1)));
}

std::optional<std::string> validate_register_flow(const PrimitiveProgram& program) {
  int reads_seen = 0;
  for (const Primitive& prim : program.prims) {
    if ((prim.verb == Verb::kWrite || prim.verb == Verb::kEgress) &&
        is_register_ref(prim.arg2)) {
      const int idx = register_index(prim.arg2);
      if (idx < 1 || idx > reads_seen) {
        return "line " + std::to_string(prim.line) + ": register " + prim.arg2 +
               " does not name a prior READ";
      }
    }
    if (prim.verb == Verb::kRead) ++reads_seen;
  }
  return std::nullopt;
}

const char* verb_name(Verb verb) {
  switch (verb) {
    case Verb::kRead: return "READ";
    case Verb::kWrite: return "WRITE";
    case Verb::kDelete: return "DELETE";
    case Verb::kExec: return "EXEC";
    case Verb::kEgress: return "EGRESS";
    case Verb::kSetuid: return "SETUID";
    case Verb::kSchedule: return "SCHEDULE";
  }
  return "?";
}

const char* verb_channel(Verb verb) {
  switch (verb) {
    case Verb::kRead: return "file_read";
    case Verb::kWrite: return "filesystem_write";
    case Verb::kDelete: return "filesystem_delete";
    case Verb::kExec: return "shell_execution";
    case Verb::kEgress: return "network_egress";
    case Verb::kSetuid: return "setuid";
    case Verb::kSchedule: return "schedule";
  }
  return "?";
}

std::string concreteness_token(const Primitive& prim) {
  if (prim.verb == Verb::kSchedule) return prim.arg2;
  return prim.arg1;
}

bool program_has_register_refs(const PrimitiveProgram& program) {
  for (const Primitive& prim : program.prims) {
    if ((prim.verb == Verb::kWrite || prim.verb == Verb::kEgress) &&
        is_register_ref(prim.arg2)) {
      return true;
    }
  }
  return false;
}

int guard_count(const PrimitiveProgram& program) {
  int n = 0;
  for (const Primitive& prim : program.prims) {
    if (prim.guard != GuardKind::kNone) ++n;
  }
  return n;
}

std::size_t whitespace_token_count(std::string_view text) {
  std::size_t n = 0;
  bool in_tok = false;
  for (char ch : text) {
    const bool ws = std::isspace(static_cast<unsigned char>(ch));
    if (!ws && !in_tok) ++n;
    in_tok = !ws;
  }
  return n;
}

}  // namespace leaklab
