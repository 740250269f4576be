#pragma once

#include <map>
#include <string>

#include "tsnmt/corpus/vocab.h"
#include "tsnmt/model/params.h"
#include "tsnmt/train/adam.h"

namespace tsnmt::train {

// Everything needed to resume training or decode.
//
// File layout: the line "TSNMT1", a tab-separated UTF-8 manifest (config,
// task keys, vocabularies, metadata, optimizer scalars, and one
// "tensor<TAB>name<TAB>shape<TAB>offset" line per tensor), the line
// "payload<TAB><bytes>", then little-endian float32 tensor data. Offsets are
// byte offsets into the payload.
struct Checkpoint {
  ModelParams<float> params;
  AdamState<float> adam;
  corpus::Vocab src_vocab;
  corpus::Vocab tgt_vocab;
  std::map<std::string, std::string> metadata;
};

inline constexpr std::string_view kCheckpointMagic = "TSNMT1";

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tsnmt::train
