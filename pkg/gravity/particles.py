"""
Particle presets accepted by ``--particle`` and the JSON API.
"""
from .constants import NEUTRON_MASS, PLANCK_MASS

PARTICLES = {
    'neutron': {
        'label': 'neutron',
        'mass': NEUTRON_MASS,
        'description': 'Ultra-cold neutron, the qBounce test particle.',
    },
    'planck': {
        'label': 'Planck mass',
        'mass': PLANCK_MASS,
        'description': 'sqrt(hbar c / G), the mass-scaling illustration.',
    },
    'kilogram': {
        'label': '1 kg',
        'mass': 1.0,
        'description': 'Tabletop test mass.',
    },
}

PARTICLE_CHOICES = [(key, preset['label']) for key, preset in PARTICLES.items()] + [('custom', 'Custom mass')]
