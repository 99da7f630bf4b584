"""Deep switch networks for binary data."""

try:
    from . import _switchnet as _ext
except ImportError:  # in-tree build: the extension sits next to the package, not inside it
    import _switchnet as _ext

Architecture = _ext.Architecture
Model = _ext.Model
TrainConfig = _ext.TrainConfig

Error = _ext.Error
ContractError = _ext.ContractError
ConfigError = _ext.ConfigError
DataError = _ext.DataError
NumericalError = _ext.NumericalError

train = _ext.train
conditional_loglik = _ext.conditional_loglik
conditional_grad = _ext.conditional_grad
finite_diff_grad = _ext.finite_diff_grad
mcmc_grad = _ext.mcmc_grad
gen_synthetic = _ext.gen_synthetic
sample_table = _ext.sample_table
entropy = _ext.entropy
tv_distance = _ext.tv_distance
js_divergence = _ext.js_divergence
kl_divergence = _ext.kl_divergence
expected_nll = _ext.expected_nll
test_nll = _ext.test_nll
encode_word = _ext.encode_word
decode_bits = _ext.decode_bits
load_mnist = _ext.load_mnist
load_dataset = _ext.load_dataset
save_dataset = _ext.save_dataset

__all__ = [name for name in dir() if not name.startswith("_")]
