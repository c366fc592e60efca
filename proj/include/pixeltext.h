/*
 * pixeltext C API: patch-rendered text modeling behind opaque handles.
 *
 * Every function that can fail returns a pxt_status; the corresponding
 * message is available from pxt_last_error() until the next failing call on
 * the same thread. Handles are created by pxt_*_create/open functions and
 * released with the matching pxt_*_free; passing NULL to a free is a no-op.
 */
#ifndef PIXELTEXT_H
#define PIXELTEXT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pxt_status {
    PXT_OK = 0,
    PXT_ERROR_CONFIG = 1,   /* usage or configuration error */
    PXT_ERROR_DATA = 2,     /* missing/malformed files or corpora */
    PXT_ERROR_NUMERIC = 3,  /* non-finite value detected in checked mode */
    PXT_ERROR_INTERNAL = 4  /* contract violation inside the library */
} pxt_status;

const char* pxt_version(void);
const char* pxt_last_error(void);

/* --------------------------------------------------------- configuration */

typedef struct pxt_config pxt_config;

pxt_status pxt_config_create(pxt_config** out);
pxt_status pxt_config_load(pxt_config* config, const char* path);
pxt_status pxt_config_set(pxt_config* config, const char* key, const char* value);
/* Writes the value (JSON-encoded for lists) into buf; fails if too small. */
pxt_status pxt_config_get(const pxt_config* config, const char* key, char* buf,
                          size_t buf_size);
void pxt_config_free(pxt_config* config);

/* ------------------------------------------------------------- rendering */

typedef struct pxt_rendering pxt_rendering;

pxt_status pxt_render_text(const char* text, uint32_t max_patches, pxt_rendering** out);
pxt_status pxt_render_words(const char* const* words, size_t num_words,
                            uint32_t max_patches, pxt_rendering** out);

uint32_t pxt_rendering_num_patches(const pxt_rendering* r);
uint32_t pxt_rendering_num_text_patches(const pxt_rendering* r);
uint32_t pxt_rendering_separator_index(const pxt_rendering* r);
int pxt_rendering_truncated(const pxt_rendering* r);
uint32_t pxt_rendering_num_words(const pxt_rendering* r);
pxt_status pxt_rendering_word_span(const pxt_rendering* r, uint32_t word, uint32_t* first,
                                   uint32_t* last);
/* Patch pixels, row-major, 256 floats per patch; buf_len in floats. */
pxt_status pxt_rendering_copy_patches(const pxt_rendering* r, float* buf, size_t buf_len);
/* Attention mask, one byte per patch; buf_len in bytes. */
pxt_status pxt_rendering_copy_mask(const pxt_rendering* r, uint8_t* buf, size_t buf_len);
pxt_status pxt_rendering_export_png(const pxt_rendering* r, const char* path);
void pxt_rendering_free(pxt_rendering* r);

/* ---------------------------------------------------------- perturbation */

/* Orthographic perturbation with the built-in confusion table. The result is
 * heap-allocated; release it with pxt_string_free. */
pxt_status pxt_perturb_text(const char* text, double rate, uint64_t seed, char** out);
void pxt_string_free(char* s);

/* ------------------------------------------------------------- pipeline */

pxt_status pxt_run_pretrain(const pxt_config* config);
pxt_status pxt_run_finetune(const pxt_config* config);
pxt_status pxt_run_evaluate(const pxt_config* config);
pxt_status pxt_run_render(const pxt_config* config);
pxt_status pxt_run_report(const pxt_config* config);

/* ----------------------------------------------------------- checkpoints */

typedef struct pxt_checkpoint pxt_checkpoint;

pxt_status pxt_checkpoint_open(const char* path, pxt_checkpoint** out);
uint32_t pxt_checkpoint_tensor_count(const pxt_checkpoint* c);
pxt_status pxt_checkpoint_tensor_name(const pxt_checkpoint* c, uint32_t index, char* buf,
                                      size_t buf_size);
/* Total float values in the named tensor, 0 if absent. */
size_t pxt_checkpoint_tensor_size(const pxt_checkpoint* c, const char* name);
void pxt_checkpoint_free(pxt_checkpoint* c);

#ifdef __cplusplus
}
#endif

#endif /* PIXELTEXT_H */
