from .jacobian_generators import generate_building_functions
