"""
URL configuration for the bouncer project.
"""
from django.urls import path

from gravity import views

urlpatterns = [
    path('api/spectrum/', views.spectrum, name='spectrum'),
    path('api/predict/', views.predict, name='predict'),
]
