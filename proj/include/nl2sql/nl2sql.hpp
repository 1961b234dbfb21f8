#pragma once

// Umbrella header: the full text-to-SQL harness.

#include "nl2sql/errors.hpp"
#include "nl2sql/util.hpp"
#include "nl2sql/text_match.hpp"
#include "nl2sql/schema.hpp"
#include "nl2sql/sqlite_db.hpp"
#include "nl2sql/content.hpp"
#include "nl2sql/selection.hpp"
#include "nl2sql/prompt.hpp"
#include "nl2sql/llm.hpp"
#include "nl2sql/consistency.hpp"
#include "nl2sql/evaluate.hpp"
#include "nl2sql/synth.hpp"
#include "nl2sql/pipeline.hpp"
#include "nl2sql/config.hpp"
