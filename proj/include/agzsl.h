/* C surface of the attribute-guided GZSL library.
 *
 * All functions return a status code; 0 is success. On failure the
 * thread-local message from agzsl_last_error() describes the problem.
 * Trained models are opaque handles owned by the library.
 */
#ifndef AGZSL_H
#define AGZSL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum agzsl_status {
    AGZSL_OK = 0,
    AGZSL_USAGE = 1,   /* bad arguments (null pointers, unknown names) */
    AGZSL_DATA = 2,    /* validation, format, or I/O failure */
    AGZSL_NUMERIC = 3  /* NaN/Inf or other numerical failure */
} agzsl_status;

typedef struct agzsl_model agzsl_model;

/* Message of the last failure on this thread; empty string if none. */
const char* agzsl_last_error(void);

/* Writes a synthetic dataset bundle. spec_text is optional `key = value`
 * lines overriding the defaults (source_classes, target_classes, attributes,
 * regions, dim, attr_dim, samples_per_class, noise, seed); NULL or empty
 * keeps every default. */
agzsl_status agzsl_gen_data(const char* spec_text, const char* out_dir);

/* Loads a dataset bundle and checks every datamodel invariant. */
agzsl_status agzsl_validate(const char* data_dir);

/* Trains on a dataset bundle and writes a checkpoint. config_text is
 * `key = value` lines (NULL or empty keeps the defaults). resume_dir, if
 * non-NULL, restores a checkpoint first; its config hash must match. */
agzsl_status agzsl_train(const char* config_text, const char* data_dir,
                         const char* out_dir, const char* resume_dir);

/* Loads the models of a checkpoint into an opaque handle. */
agzsl_status agzsl_model_load(const char* checkpoint_dir, agzsl_model** out);
void agzsl_model_free(agzsl_model* model);

/* Evaluates one protocol ("AGAN-GZSL", "AGAN-ZSL", "AFGN-GZSL", "AFGN-ZSL")
 * on a dataset bundle. Writes a key-value report to report_path if non-NULL;
 * any of s/t/h may be NULL. */
agzsl_status agzsl_eval(agzsl_model* model, const char* data_dir,
                        const char* protocol, const char* report_path,
                        double* s, double* t, double* h);

/* Synthesizes per_class features (0 keeps the trained default) for every
 * class of the dataset and writes them as a bundle. */
agzsl_status agzsl_synth(agzsl_model* model, const char* data_dir,
                         size_t per_class, uint64_t seed, const char* out_dir);

/* Dumps the class-similarity tables (joint, pmi, soft targets) derived from
 * the dataset's class semantics. */
agzsl_status agzsl_pmi_dump(const char* data_dir, const char* out_dir);

/* Exports attention records for up to max_samples (0 = all) test-target
 * samples. */
agzsl_status agzsl_export_attention(agzsl_model* model, const char* data_dir,
                                    size_t max_samples, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* AGZSL_H */
