#pragma once

#include <stdexcept>
#include <string>

namespace tsnmt {

// Base of every error raised by the library. `module()` names the component
// that raised it so the CLI can print a tagged one-line diagnostic.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

#define TSNMT_DEFINE_ERROR(Name, Module)                                \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(Module, what) {}     \
  };

TSNMT_DEFINE_ERROR(DimensionError, "autodiff")
TSNMT_DEFINE_ERROR(IndexError, "autodiff")
TSNMT_DEFINE_ERROR(ContractError, "contract")
TSNMT_DEFINE_ERROR(UnknownTaskError, "model")
TSNMT_DEFINE_ERROR(ConfigError, "config")
TSNMT_DEFINE_ERROR(ParseError, "corpus")
TSNMT_DEFINE_ERROR(AlignmentError, "corpus")
TSNMT_DEFINE_ERROR(OversizeExampleError, "corpus")
TSNMT_DEFINE_ERROR(MalformedStreamError, "bpe")
TSNMT_DEFINE_ERROR(VocabularyError, "toy")
TSNMT_DEFINE_ERROR(NumericError, "training")
TSNMT_DEFINE_ERROR(CheckpointVersionError, "checkpoint")
TSNMT_DEFINE_ERROR(CheckpointTruncatedError, "checkpoint")
TSNMT_DEFINE_ERROR(CheckpointManifestError, "checkpoint")
TSNMT_DEFINE_ERROR(IoError, "io")

#undef TSNMT_DEFINE_ERROR

}  // namespace tsnmt
