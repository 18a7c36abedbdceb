#pragma once

#include "sniff/errors.hpp"
#include "sniff/float_word.hpp"
#include "sniff/numeric.hpp"
#include "sniff/random.hpp"
#include "sniff/fault.hpp"
#include "sniff/model.hpp"
#include "sniff/session.hpp"
#include "sniff/extraction.hpp"
#include "sniff/evaluation.hpp"
#include "sniff/serialization.hpp"
#include "sniff/report.hpp"
#include "sniff/commands.hpp"
