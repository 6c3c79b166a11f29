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

/* Compiled as C to keep the public header C-clean. */
#include "avsd/avsd.h"

int avsd_header_check_status(void) {
  avsd_corpus* corpus = 0;
  avsd_status s = avsd_corpus_load(0, &corpus);
  return s == AVSD_INVALID_ARGUMENT ? 0 : 1;
}
