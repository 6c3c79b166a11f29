// Copyright 2026 The avsd-dialog Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include "corpus/dialog.hpp"
#include "corpus/vocab.hpp"
#include "model/avsd_model.hpp"
#include "model/config.hpp"
#include "topics/lda.hpp"

namespace avsd::model {

// Text a turn's context theta is inferred from.
corpus::Tokens topic_context(const corpus::Dialog& dialog, std::size_t turn,
                             TopicSource source);

// Encodes every dialog for the model. `topics` is required when the config
// uses topics and must have config.num_topics topics. Theta inference is
// seeded per (dialog id, turn), so results do not depend on corpus order.
std::vector<DialogInput> prepare_dialogs(const corpus::Corpus& corpus,
                                         const corpus::Vocab& vocab,
                                         const ModelConfig& config,
                                         const topics::TopicModel* topics);

}  // namespace avsd::model
