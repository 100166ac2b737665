#include "cqa/error.hpp"
#include "cqa/solver.hpp"

#include <sys/wait.h>

#include <array>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace cqa {

namespace {

std::string shell_quote(const std::string &s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

[[noreturn]] void output_error(const std::string &msg, std::string_view output) {
  std::string raw(output.substr(0, 4000));
  throw SolverError(msg + "\n--- solver output ---\n" + raw);
}

} // namespace

MaxSatResult parse_solver_output(std::string_view output, const WcnfFormula &psi) {
  MaxSatResult r;
  std::string status;
  bool have_cost = false;
  std::uint64_t reported = 0;
  bool have_model = false;
  Model model(static_cast<std::size_t>(psi.num_vars) + 1, 0);

  std::istringstream in{std::string(output)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.size() < 2 || line[1] != ' ')
      continue;
    std::string_view rest = std::string_view(line).substr(2);
    switch (line[0]) {
    case 's':
      status = std::string(rest);
      break;
    case 'o': {
      auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), reported);
      if (ec != std::errc())
        output_error("unparsable cost line: " + line, output);
      have_cost = true;
      break;
    }
    case 'v': {
      have_model = true;
      std::istringstream toks{std::string(rest)};
      std::vector<std::string> tokens;
      for (std::string tok; toks >> tok;)
        tokens.push_back(tok);
      // A lone 0/1 string of full length is the new-format model line.
      if (tokens.size() == 1 && tokens[0].size() + 1 == model.size() && model.size() > 2 &&
          tokens[0].find_first_not_of("01") == std::string::npos) {
        for (std::size_t k = 0; k < tokens[0].size(); ++k)
          model[k + 1] = tokens[0][k] == '1';
        break;
      }
      for (const auto &tok : tokens) {
        int lit = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), lit);
        if (ec != std::errc() || p != tok.data() + tok.size())
          output_error("unparsable model token '" + tok + "'", output);
        auto v = static_cast<std::size_t>(std::abs(lit));
        if (lit != 0 && v < model.size())
          model[v] = lit > 0;
      }
      break;
    }
    default:
      break;
    }
  }
  if (status == "UNSATISFIABLE") {
    r.status = MaxSatStatus::hard_unsat;
    return r;
  }
  if (status == "UNKNOWN" || status.empty()) {
    if (status.empty())
      output_error("no status line", output);
    return r;
  }
  if (status != "OPTIMUM FOUND" && status != "SATISFIABLE")
    output_error("unknown status '" + status + "'", output);
  if (!have_model)
    output_error("status " + status + " without a model", output);
  if (!satisfies(psi.hard, model))
    output_error("solver model violates a hard clause", output);
  r.cost = soft_cost(psi, model);
  if (have_cost && reported != r.cost)
    output_error("reported cost " + std::to_string(reported) + " but the model costs " + std::to_string(r.cost),
                 output);
  r.model = std::move(model);
  r.status = status == "OPTIMUM FOUND" || psi.soft.empty() ? MaxSatStatus::optimum : MaxSatStatus::unknown;
  r.sat_calls = 1;
  r.components = 1;
  return r;
}

MaxSatResult external_solve(const std::string &command, const WcnfFormula &psi) {
  static std::atomic<unsigned> counter{0};
  namespace fs = std::filesystem;
  fs::path file = fs::temp_directory_path() /
                  ("cqa-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + ".wcnf");
  {
    std::ofstream out(file);
    out << export_dimacs(psi);
    if (!out)
      throw SolverError("cannot write " + file.string());
  }
  std::string cmd = command + " " + shell_quote(file.string());
  FILE *pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    fs::remove(file);
    throw SolverError("cannot run solver: " + command);
  }
  std::string output;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
    output.append(buf.data(), got);
  int status = ::pclose(pipe);
  std::error_code ec;
  fs::remove(file, ec);
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (code != 0 && code != 10 && code != 20 && code != 30)
    output_error("solver exited with status " + std::to_string(code), output);
  return parse_solver_output(output, psi);
}

std::string format_solution(const MaxSatResult &result, int num_vars, bool weighted) {
  std::ostringstream out;
  switch (result.status) {
  case MaxSatStatus::hard_unsat:
    out << "s UNSATISFIABLE\n";
    return out.str();
  case MaxSatStatus::unknown:
    if (result.model.empty()) {
      out << "s UNKNOWN\n";
      return out.str();
    }
    if (weighted)
      out << "o " << result.cost << "\n";
    out << "s SATISFIABLE\n";
    break;
  case MaxSatStatus::optimum:
    if (weighted)
      out << "o " << result.cost << "\n";
    out << (weighted ? "s OPTIMUM FOUND\n" : "s SATISFIABLE\n");
    break;
  }
  out << "v";
  for (int v = 1; v <= num_vars; ++v) {
    bool val = static_cast<std::size_t>(v) < result.model.size() && result.model[static_cast<std::size_t>(v)];
    out << ' ' << (val ? v : -v);
  }
  out << " 0\n";
  return out.str();
}

} // namespace cqa
