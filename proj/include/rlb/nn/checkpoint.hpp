#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rlb/nn/tensor.hpp"

namespace rlb::nn {

class Module;

// Named tensors plus string metadata, stored as a plain text file.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::map<std::string, Tensor> tensors;

  void put_module(const std::string& prefix, const Module& module);
  // Throws ValidationError if a tensor is missing or has the wrong shape.
  void get_module(const std::string& prefix, Module& module) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace rlb::nn
