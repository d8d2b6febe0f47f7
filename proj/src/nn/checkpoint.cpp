#include "rlb/nn/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rlb/error.hpp"
#include "rlb/nn/layers.hpp"

namespace rlb::nn {

namespace {

constexpr const char* kMagic = "rlb-checkpoint";
constexpr int kVersion = 1;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool has_space(const std::string& s) { return s.find_first_of(" \t\n\r") != std::string::npos; }

}  // namespace

void Checkpoint::put_module(const std::string& prefix, const Module& module) {
  for (const auto* p : module.parameters()) tensors[prefix + "/" + p->name] = p->value;
}

void Checkpoint::get_module(const std::string& prefix, Module& module) const {
  for (auto* p : module.parameters()) {
    const auto key = prefix + "/" + p->name;
    auto it = tensors.find(key);
    if (it == tensors.end()) throw ValidationError("checkpoint is missing tensor " + key);
    if (!it->second.same_shape(p->value)) {
      throw ValidationError("checkpoint tensor " + key + " has shape " +
                            std::to_string(it->second.rows()) + "x" +
                            std::to_string(it->second.cols()) + ", expected " +
                            std::to_string(p->value.rows()) + "x" +
                            std::to_string(p->value.cols()));
    }
    p->value = it->second;
  }
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << kMagic << ' ' << kVersion << '\n';
    for (const auto& [k, v] : meta) {
      if (has_space(k) || v.find('\n') != std::string::npos)
        throw ContractViolation("checkpoint meta key/value not storable: " + k);
      out << "meta " << k << ' ' << v << '\n';
    }
    for (const auto& [k, t] : tensors) {
      if (has_space(k)) throw ContractViolation("checkpoint tensor name has whitespace: " + k);
      out << "tensor " << k << ' ' << t.rows() << ' ' << t.cols();
      for (double v : t.values()) out << ' ' << fmt(v);
      out << '\n';
    }
    out << "end\n";
    if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kMagic) throw ValidationError(path.string() + " is not a checkpoint file");
  if (version != kVersion)
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  std::string line;
  std::getline(in, line);
  bool ended = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "end") {
      ended = true;
      break;
    }
    if (tag == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ck.meta[key] = value;
    } else if (tag == "tensor") {
      std::string key;
      std::size_t rows = 0, cols = 0;
      ls >> key >> rows >> cols;
      std::vector<double> data(rows * cols);
      for (auto& v : data) {
        std::string tok;
        if (!(ls >> tok)) throw ValidationError("checkpoint tensor " + key + " is truncated");
        v = std::stod(tok);
      }
      ck.tensors[key] = Tensor(rows, cols, std::move(data));
    } else {
      throw ValidationError("unexpected checkpoint record '" + tag + "'");
    }
  }
  if (!ended) throw ValidationError("checkpoint " + path.string() + " is truncated");
  return ck;
}

}  // namespace rlb::nn
