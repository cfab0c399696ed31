#include <cstdio>
#include <fstream>
#include <sstream>

#include "rsgda/harness.hpp"

#ifndef RSGDA_VERSION
#define RSGDA_VERSION "0.0.0"
#endif

namespace rsgda::harness {

namespace fs = std::filesystem;

const char* version() noexcept { return RSGDA_VERSION; }

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return kExitConfig;
    case ErrorKind::Constraint: return kExitConstraint;
    case ErrorKind::OracleViolation:
    case ErrorKind::Diagnostic:
    case ErrorKind::InsufficientData:
    case ErrorKind::UndefinedRatio: return kExitCheck;
    default: return kExitGeneric;
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void cell(std::ostringstream& out, const std::optional<double>& v) {
  out << ',';
  if (v) out << format_double(*v);
}

}  // namespace

std::string trace_csv(const std::vector<TraceRecord>& trace, const std::string& config_hash,
                      std::uint64_t seed) {
  std::ostringstream out;
  out << "# config_hash=" << config_hash << " seed=" << seed << " version=" << version() << '\n';
  out << kTraceHeader << '\n';
  for (const auto& r : trace) {
    out << r.k << ',' << to_string(r.branch) << ',' << format_double(r.alpha) << ','
        << format_double(r.eta) << ',' << format_double(r.p) << ','
        << format_double(r.grad_x_norm) << ',' << format_double(r.grad_y_norm);
    cell(out, r.h);
    cell(out, r.V);
    cell(out, r.dist);
    cell(out, r.loss);
    out << '\n';
  }
  return out.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

}  // namespace rsgda::harness
