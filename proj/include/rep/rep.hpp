#pragma once
// Umbrella header for the rich event prediction library.
#include "rep/adam.hpp"
#include "rep/amr.hpp"
#include "rep/attention_export.hpp"
#include "rep/checkpoint.hpp"
#include "rep/dataset.hpp"
#include "rep/document.hpp"
#include "rep/encoder.hpp"
#include "rep/errors.hpp"
#include "rep/events.hpp"
#include "rep/extract.hpp"
#include "rep/gradcheck.hpp"
#include "rep/jsonl.hpp"
#include "rep/mcnc.hpp"
#include "rep/params.hpp"
#include "rep/penman.hpp"
#include "rep/predictor.hpp"
#include "rep/rewrite.hpp"
#include "rep/rng.hpp"
#include "rep/synthetic.hpp"
#include "rep/tape.hpp"
#include "rep/tensor.hpp"
#include "rep/trainer.hpp"
#include "rep/vocab.hpp"
