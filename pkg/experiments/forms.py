from django import forms

from trees.grid import Boundary

from .sampling import TreeModel

EXPERIMENT_KINDS = [
    ('crossing_prob', 'Crossing probability'),
    ('fit_gamma', 'Crossing exponent fit'),
    ('geometric_decay', 'Geometric decay in k'),
    ('telescopic', 'Telescopic bound'),
    ('mgf', 'Moment generating function of the crossing count'),
    ('quadratic_growth', 'Growth of the exponent in k'),
    ('rectangle_traversal', 'Rectangle traversal bound'),
    ('delta_stability', 'Resolution stability'),
    ('choking', 'Choking probability'),
    ('droplet_pc', 'Droplet critical scale'),
    ('bernoulli_crossing', 'Self-dual bond crossing'),
    ('ust_uniformity', 'Uniformity of Wilson samples'),
    ('branch_dimension', 'Dimension of a tree branch'),
    ('branching_census', 'Branching points by scale'),
    ('lemma_suite', 'Deterministic coupling checks'),
    ('semipath', 'Semipath domination'),
    ('cover_circle', 'Circle cover invariants'),
]

POSITIVE_FIELDS = ('r', 'R', 'aspect', 'width', 'delta', 'r_over_delta', 'n_samples', 'n_side', 'p')


def parse_float_list(value):
    """'2, 3, 4.5' -> (2.0, 3.0, 4.5)."""
    if value in (None, ''):
        return ()
    try:
        return tuple(float(item) for item in str(value).split(',') if item.strip())
    except ValueError:
        raise forms.ValidationError(f'"{value}" is not a comma-separated list of numbers.')


class ExperimentConfigForm(forms.Form):
    """
    Validates one experiment config file (key=value lines). Any key the form
    does not declare is an error.
    """
    kind = forms.ChoiceField(choices=EXPERIMENT_KINDS)
    model = forms.ChoiceField(choices=TreeModel.choices, required=False)
    bc_inner = forms.ChoiceField(choices=Boundary.choices, required=False)
    bc_outer = forms.ChoiceField(choices=Boundary.choices, required=False)
    r = forms.FloatField(required=False)
    R = forms.FloatField(required=False)
    aspect = forms.FloatField(required=False)
    width = forms.FloatField(required=False)
    delta = forms.FloatField(required=False)
    r_over_delta = forms.FloatField(required=False)
    k = forms.IntegerField(required=False, min_value=0)
    k_min = forms.IntegerField(required=False, min_value=1)
    k_max = forms.IntegerField(required=False, min_value=1)
    n_samples = forms.IntegerField(required=False)
    seed = forms.IntegerField(min_value=0)
    t = forms.FloatField(required=False)
    p = forms.FloatField(required=False)
    margin = forms.FloatField(required=False, min_value=0.0, max_value=1.0)
    n_side = forms.IntegerField(required=False)
    aspects = forms.CharField(required=False)
    radii = forms.CharField(required=False)
    deltas = forms.CharField(required=False)
    ts = forms.CharField(required=False)
    eps = forms.CharField(required=False)
    cs = forms.CharField(required=False)
    sigmas = forms.CharField(required=False)
    output = forms.CharField(required=False)

    def __init__(self, data=None, *args, **kwargs):
        self.unknown_keys = sorted(set(data or {}) - set(self.base_fields))
        super().__init__(data, *args, **kwargs)

    def _clean_list(self, name):
        values = parse_float_list(self.cleaned_data.get(name))
        if any(v <= 0 for v in values) and name != 'ts':
            raise forms.ValidationError('Every entry must be positive.')
        return values

    def clean_aspects(self):
        return self._clean_list('aspects')

    def clean_radii(self):
        radii = self._clean_list('radii')
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise forms.ValidationError('Radii must be strictly increasing.')
        return radii

    def clean_deltas(self):
        return self._clean_list('deltas')

    def clean_ts(self):
        return self._clean_list('ts')

    def clean_eps(self):
        return self._clean_list('eps')

    def clean_cs(self):
        cs = self._clean_list('cs')
        if any(c >= 1 for c in cs):
            raise forms.ValidationError('Cover radii must lie in (0, 1).')
        return cs

    def clean_sigmas(self):
        sigmas = self._clean_list('sigmas')
        if any(s < 1 for s in sigmas):
            raise forms.ValidationError('Dilations must be at least 1.')
        return sigmas

    def clean(self):
        cleaned = super().clean()
        for key in self.unknown_keys:
            self.add_error(None, f'Unknown config key "{key}".')
        for name in POSITIVE_FIELDS:
            value = cleaned.get(name)
            if value is not None and value <= 0:
                self.add_error(name, 'Must be positive.')
        r, R = cleaned.get('r'), cleaned.get('R')
        if r is not None and R is not None and R <= r:
            self.add_error('R', 'The outer radius must exceed the inner radius.')
        k_min, k_max = cleaned.get('k_min'), cleaned.get('k_max')
        if k_min is not None and k_max is not None and k_max < k_min:
            self.add_error('k_max', 'k_max must be at least k_min.')
        if cleaned.get('model') == TreeModel.VACANT and (cleaned.get('k') or 1) > 1:
            self.add_error('k', 'Vacant crossings are counted as existence only.')
        return cleaned

    def settings(self):
        """Cleaned values with unset keys dropped."""
        return {key: value for key, value in self.cleaned_data.items() if value not in (None, '', ())}
